import sys

from infrastructure.cli.runner import main

sys.exit(main())
