import sys

from mirrorstate.main import main

sys.exit(main())
