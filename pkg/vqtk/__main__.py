import sys

from vqtk.cli import main

sys.exit(main())
