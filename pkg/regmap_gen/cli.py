# ----------------------------------------------------------------------------------
# Command-line entry point: parse -> resolve -> collect -> allocate -> emit.
#
# Exit codes: 0 success, 1 input error (file:line:col diagnostic on stderr),
# 2 usage error. Output files are staged next to their destination and renamed
# only after every phase, verification included, has succeeded.
# ----------------------------------------------------------------------------------

import os
import sys
import logging
import argparse
import tempfile
from dataclasses import dataclass, field
from typing import List, Optional

from regmap_gen import __version__
from regmap_gen.constants import *
from regmap_gen.errors import RegmapError, UsageError, VerificationError
from regmap_gen.functions import get_logger, setup_logging
from regmap_gen.hiertree import build_instance_tree, resolve_modules
from regmap_gen.regmodel import BusConfig, allocate, collect_registers
from regmap_gen.codegen import (check_name_coherence, emit_artifacts, render_table,
                                unmatched_macro_uses)
from regmap_gen.decodeoracle import check_hit_json_agreement, verify_map

log = get_logger("cli")

EXIT_OK, EXIT_INPUT, EXIT_USAGE = 0, 1, 2
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class RunConfig:
    top: str
    search_dirs: List[str] = field(default_factory=list)
    out_dir: Optional[str] = None
    lb_hi: int = DEFAULT_LB_HI
    base_offset: int = DEFAULT_BASE
    gen_decoder: bool = True
    verify: bool = True
    log_level: str = "WARNING"
    print_map: bool = False
    progress: bool = False

    def __post_init__(self):
        lo, hi = LB_HI_RANGE
        if not lo <= self.lb_hi <= hi:
            raise UsageError(f"--lb-hi must be in [{lo}, {hi}], got {self.lb_hi}")
        space = 1 << (self.lb_hi + 1)
        if not 0 <= self.base_offset < space:
            raise UsageError(f"--base must be in [0, {space}) for LB_HI={self.lb_hi}, got {self.base_offset}")
        if self.log_level.upper() not in LOG_LEVELS:
            raise UsageError(f"--log-level must be one of {', '.join(LOG_LEVELS)}, got {self.log_level}")
        if not os.path.isfile(self.top):
            raise UsageError(f"top file not found: {self.top}")
        for d in self.search_dirs:
            if not os.path.isdir(d):
                raise UsageError(f"search directory not found: {d}")

    @property
    def bus(self):
        return BusConfig(lb_hi=self.lb_hi, base_offset=self.base_offset)


# Stage every file in the destination directory, then rename them all into place
def write_outputs(files, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out_dir)
            staged.append((tmp, os.path.join(out_dir, name)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)
    return [dest for _, dest in staged]


class RegisterMapRun:
    def __init__(self, config):
        self.config       = config
        self.top          = config.top
        self.search_dirs  = config.search_dirs
        self.out_dir      = config.out_dir
        self.bus          = config.bus
        self.gen_decoder  = config.gen_decoder
        self.verify       = config.verify
        self.print_map    = config.print_map
        self.progress     = config.progress
        self.amap         = None
        self.artifacts    = None

    # Everything up to and including text emission; raises RegmapError on bad input
    def build(self):
        graph = resolve_modules(self.top, self.search_dirs, progress=self.progress)
        tree = build_instance_tree(graph)
        log.info(f"Elaborated {sum(1 for _ in tree.walk()) - 1} instances under '{tree.module_name}'")
        regs = collect_registers(tree, graph)
        self.amap = allocate(regs, self.bus)
        self.artifacts = emit_artifacts(tree, regs, self.amap, self.top, self.gen_decoder, graph)

        for path, use in unmatched_macro_uses(graph, tree, self.gen_decoder):
            log.warning(f"{path}:{use.line}:{use.col}: `{use.name} matches no generated macro")
        return self.artifacts

    def check(self):
        verify_map(self.amap).raise_for_violations()
        agreement = check_hit_json_agreement(self.artifacts.addr_header, self.artifacts.json_map)
        agreement.raise_for_violations("HIT defines")
        missing = check_name_coherence(self.artifacts.auto_header, self.artifacts.scopes)
        if missing:
            raise VerificationError("instance macros use signals no generated macro declares: "
                                    + ", ".join(missing))
        log.info("Address map verified")

    def render(self):
        colored = sys.stdout.isatty()
        title = (f"Register map for {self.artifacts.top} (LB_HI={self.bus.lb_hi}, "
                 f"{len(self.amap)} registers)")
        if colored:
            title = f"{CYAN}{title}{RESET}"
        return f"{title}\n{render_table(self.amap)}\n"

    def run(self):
        try:
            self.build()
            if self.verify:
                self.check()
            if self.print_map:
                sys.stdout.write(self.render())
            if self.out_dir is not None:
                written = write_outputs(self.artifacts.files(), self.out_dir)
                log.info(f"Wrote {len(written)} files to {self.out_dir}")
        except UsageError as e:
            log.error(str(e))
            return EXIT_USAGE
        except RegmapError as e:
            log.error(str(e))
            return EXIT_INPUT
        except OSError as e:
            log.error(f"{e.filename or self.out_dir}: {e.strerror or e}")
            return EXIT_INPUT
        return EXIT_OK


def run(config):
    return RegisterMapRun(config).run()


# Table on standard output, no files written
def print_map(config):
    config = RunConfig(**{**config.__dict__, "out_dir": None, "print_map": True})
    return RegisterMapRun(config).run()


def _int(text):
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer: {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Generate local bus register maps, decoders and documentation from attributed Verilog.")
    parser.add_argument("-t", "--top",      required=True, help="Top-level Verilog file.")
    parser.add_argument("-d", "--dir",      default=[], action="append", dest="search_dirs",
                        help="Directory to search for <module>.v files (repeatable, searched in order).")
    parser.add_argument("-o", "--out",      default=None, help="Output directory (default: current directory).")
    parser.add_argument("--lb-hi",          default=DEFAULT_LB_HI, type=_int,
                        help=f"Index of the most significant bus address bit (default {DEFAULT_LB_HI}).")
    parser.add_argument("--base",           default=DEFAULT_BASE, type=_int,
                        help="First address available to the allocator (default 0).")
    parser.add_argument("--no-decoder",     default=False, action="store_true",
                        help="Do not emit the AUTOMATIC_decode macro.")
    parser.add_argument("--no-verify",      default=False, action="store_true",
                        help="Skip the address sweep and HIT/JSON agreement check.")
    parser.add_argument("--print",          default=False, action="store_true", dest="print_map",
                        help="Print the register table; files are written only together with -o.")
    parser.add_argument("--log-level",      default="WARNING", type=str.upper, choices=LOG_LEVELS,
                        help="Diagnostic verbosity on standard error (default WARNING).")
    parser.add_argument("-v", "--verbose",  default=False, action="store_true", help="Same as --log-level INFO.")
    parser.add_argument("--progress",       default=False, action="store_true",
                        help="Show a progress bar while parsing sources.")
    parser.add_argument("--version",        action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    level = "INFO" if args.verbose and args.log_level == "WARNING" else args.log_level
    setup_logging(getattr(logging, level))

    out_dir = args.out
    if out_dir is None and not args.print_map:
        out_dir = os.curdir

    try:
        config = RunConfig(
            top=args.top,
            search_dirs=args.search_dirs,
            out_dir=out_dir,
            lb_hi=args.lb_hi,
            base_offset=args.base,
            gen_decoder=not args.no_decoder,
            verify=not args.no_verify,
            log_level=level,
            print_map=args.print_map,
            progress=args.progress,
        )
    except UsageError as e:
        log.error(str(e))
        return EXIT_USAGE
    return run(config)
