import sys

from irlmrac.cli import main

sys.exit(main())
