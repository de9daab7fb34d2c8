from jpegid.cli import main
import sys

sys.exit(main())
