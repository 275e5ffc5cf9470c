import sys

from mi_accountant.cli import main

sys.exit(main())
