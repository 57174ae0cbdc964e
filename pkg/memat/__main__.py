import memat.cli
memat.cli.main()
