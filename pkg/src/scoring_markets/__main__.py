import sys

from scoring_markets.main import main


sys.exit(main(sys.argv[1:]))
