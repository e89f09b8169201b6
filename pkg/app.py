import sys

from modules import cli

if __name__ == "__main__":
    sys.exit(cli.main())
