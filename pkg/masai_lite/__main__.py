import sys

from masai_lite.cli import main

sys.exit(main())
