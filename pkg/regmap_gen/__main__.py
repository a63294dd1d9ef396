import sys

from regmap_gen.cli import main

sys.exit(main())
