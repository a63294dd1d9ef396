# Bus defaults
DEFAULT_LB_HI        = 14       # MSB index of lb_addr; address space is 2**(LB_HI+1)
DEFAULT_BASE         = 0        # First address handed out by the allocator
DATA_WIDTH           = 32       # Width of lb_data
LB_HI_RANGE          = (4, 30)  # Accepted --lb-hi values, inclusive
DEFAULT_CLOCK_DOMAIN = "lb"     # Registers without a cd attribute live on lb_clk

# Attribute keys understood on ports and instantiations
ATTR_EXTERNAL     = "external"
ATTR_SIGNAL_TYPE  = "signal_type"
ATTR_CLOCK_DOMAIN = "cd"
ATTR_DESCRIPTION  = "description"
ATTR_AUTOMATIC    = "lb_automatic"
ATTR_ADDR_WIDTH   = "aw"
ATTR_GVAR         = "gvar"
ATTR_GCNT         = "gcnt"

KNOWN_ATTRIBUTES = (
    ATTR_EXTERNAL, ATTR_SIGNAL_TYPE, ATTR_CLOCK_DOMAIN, ATTR_DESCRIPTION,
    ATTR_AUTOMATIC, ATTR_ADDR_WIDTH, ATTR_GVAR, ATTR_GCNT,
)

# Register variants
PLAIN        = "plain"
PLUS_WE      = "plus-we"
PLUS_RE      = "plus-re"
SINGLE_CYCLE = "single-cycle"
SIGNAL_TYPES = (PLAIN, PLUS_WE, PLUS_RE, SINGLE_CYCLE)

# Suffix of the strobe sibling port ("trailing _we")
WE_SUFFIX = "_we"
RE_SUFFIX = "_re"

# Macro names
AUTOMATIC_PREFIX   = "AUTOMATIC_"
DECODE_MACRO       = "AUTOMATIC_decode"
SELF_MACRO_PREFIX  = "AUTOMATIC_self_"
HIT_PREFIX         = "HIT_"
TOOL_NAME          = "regmap-gen"

# Verilog keywords the scanner cares about
KEYWORDS = frozenset((
    "module", "endmodule", "macromodule", "primitive", "endprimitive",
    "input", "output", "inout", "wire", "reg", "tri", "logic", "integer", "signed",
    "parameter", "localparam", "assign", "always", "initial",
    "begin", "end", "case", "casex", "casez", "endcase", "default",
    "fork", "join", "function", "endfunction", "task", "endtask",
    "generate", "endgenerate", "genvar", "for", "if", "else",
    "specify", "endspecify", "posedge", "negedge", "or",
))
DIRECTIONS = ("input", "output", "inout")
NET_TYPES  = ("wire", "reg", "tri", "logic")

# Body block keywords: opener -> closer
BLOCK_PAIRS = {
    "begin":    "end",
    "case":     "endcase",
    "casex":    "endcase",
    "casez":    "endcase",
    "fork":     "join",
    "function": "endfunction",
    "task":     "endtask",
    "generate": "endgenerate",
    "specify":  "endspecify",
}
BRACKET_PAIRS = {"(": ")", "[": "]", "{": "}"}

# Compiler directives; the first group swallows the rest of its line
LINE_DIRECTIVES = frozenset((
    "define", "undef", "include", "timescale", "default_nettype", "resetall",
    "celldefine", "endcelldefine", "line", "pragma", "unconnected_drive",
    "nounconnected_drive",
))
ARG_DIRECTIVES  = frozenset(("ifdef", "ifndef", "elsif"))
BARE_DIRECTIVES = frozenset(("else", "endif"))

# Color codes
CYAN   = "\033[36m"
GRAY   = "\033[90m"
RED    = "\033[31m"
YELLOW = "\033[33m"
RESET  = "\033[0m"
