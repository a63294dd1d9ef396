#----------------------------------------------------------------------------------------------
# Pre-compile step for designs on the local bus.
# Reads the top-level Verilog file, follows every lb_automatic instantiation to its
# <module>.v file and writes four files next to the build:
#   <top>_auto.vh       instance connection macros and the AUTOMATIC_decode decoder
#   addr_map_<top>.vh   LB_HI and one HIT_<register> address predicate per register
#   regmap_<top>.json   register map for host software
#   regmap_<top>.md     register documentation
#
# Example:  python generate.py -t designs/station/station.v -o build
#----------------------------------------------------------------------------------------------

import sys

from regmap_gen.cli import main

if __name__ == "__main__":
    sys.exit(main())
