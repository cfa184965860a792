import sys

from voroperc.cli import main

sys.exit(main())
