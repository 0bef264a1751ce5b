import sys

from component_miner.cli import main

sys.exit(main())
