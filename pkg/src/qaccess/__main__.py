import sys

from qaccess.cli import main

sys.exit(main())
