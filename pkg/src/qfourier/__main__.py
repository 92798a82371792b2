from qfourier.cli import main

main()
