import sys

from nsdelta.cli import main

sys.exit(main())
