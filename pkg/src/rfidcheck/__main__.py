import sys

from rfidcheck.cli import main

sys.exit(main())
