# ----------------------------------------------------------------------------------
# Text emitters: instance connection macros, address-map header, decoder macro,
# JSON register map and markdown documentation.
# Every emitter is a pure function of its inputs and produces LF-terminated text.
# ----------------------------------------------------------------------------------

import os
import re
import json
from dataclasses import dataclass, replace
from typing import Tuple

from tabulate import tabulate

from regmap_gen.constants import *
from regmap_gen.errors import DecoderError, NameCollisionError
from regmap_gen.functions import display_path, escape_markdown, get_logger, join_prefix
from regmap_gen.regmodel import group_by_instance

log = get_logger("codegen")

DOC_HEADERS = ["Name", "Base", "Width", "Access", "Sign", "Clock domain", "Description"]


@dataclass(frozen=True)
class EmittedArtifacts:
    top: str
    auto_header: str
    addr_header: str
    json_map: str
    docs: str
    scopes: Tuple["MacroScope", ...] = ()

    # Output file name -> text
    def files(self):
        return {
            f"{self.top}_auto.vh":       self.auto_header,
            f"addr_map_{self.top}.vh":   self.addr_header,
            f"regmap_{self.top}.json":   self.json_map,
            f"regmap_{self.top}.md":     self.docs,
        }


def _text(lines):
    return "\n".join(lines).rstrip("\n") + "\n"


def _banner(file_name, top_file):
    return [f"// {file_name}", f"// generated by {TOOL_NAME} from {top_file}; do not edit"]


# Backslash continuation; keep a space when the line ends in an identifier character
def _continued(line):
    return line + (" \\" if re.search(r"[A-Za-z0-9_$]$", line) else "\\")


def _define(name, body, inline_first=False, indent=""):
    if not body:
        return [f"`define {name}"]
    if inline_first:
        lines = [f"`define {name} {body[0]}"] + [indent + b for b in body[1:]]
    else:
        lines = [f"`define {name}"] + [indent + b for b in body]
    return [_continued(line) for line in lines[:-1]] + [lines[-1]]


@dataclass(frozen=True)
class PortWire:
    name: str
    direction: str
    vector: str = ""

    @property
    def declaration(self):
        return " ".join(part for part in (self.direction, self.vector, self.name) if part)


# Site macros of one module and the macro that declares the signals they connect to
@dataclass(frozen=True)
class MacroScope:
    module: str
    declared_by: str
    sites: Tuple[str, ...] = ()


def _own_wires(regs):
    wires = []
    for reg in regs:
        if reg.has_write_strobe:
            wires.append(PortWire(reg.port_name + WE_SUFFIX, "input"))
        if reg.has_read_strobe:
            wires.append(PortWire(reg.port_name + RE_SUFFIX, "input"))
        wires.append(PortWire(reg.port_name, "input" if reg.writable else "output", _vector(reg)))
    return wires


class _PortPlanner:
    # Register ports of every node, memoized by prefix
    def __init__(self, regs_by_instance):
        self.regs_by_instance = regs_by_instance
        self.cache = {}

    # Ports a node exposes to its parent: its own registers, then those forwarded from below
    def ports(self, node):
        if node.prefix not in self.cache:
            self.cache[node.prefix] = _own_wires(self.regs_by_instance.get(node.prefix, [])) + self.forwarded(node)
        return self.cache[node.prefix]

    def forwarded(self, node):
        return [replace(w, name=join_prefix(child.local_name, w.name))
                for child in node.children for w in self.ports(child)]


def _sources_comment(node, graph, root):
    if graph is None:
        return []
    parent = display_path(graph.unit(node.parent_module).path, root)
    defined = display_path(graph.unit(node.module_name).path, root)
    return [f"// instantiated in {parent}, defined in {defined}"]


def _collision(message, node, graph):
    if graph is None or node.instance is None:
        return NameCollisionError(message)
    return NameCollisionError(message, graph.unit(node.parent_module).path, node.instance.line, node.instance.col)


def _check_forwarded_ports(node, wires, graph):
    if graph is None:
        return
    unit, module = graph.modules[node.module_name]
    for w in wires:
        port = module.port(w.name)
        if port is not None:
            raise NameCollisionError(f"forwarded register port '{w.name}' clashes with port '{port.name}' "
                                     f"of '{module.name}'", unit.path, port.line, port.col)


def _warn_unused_site(node, name, graph):
    module = graph.module(node.parent_module)
    if name not in {u.name for u in module.body_uses}:
        log.warning(f"{name} is generated but not used at the instantiation site of {node.display_path}")


def _warn_unused_ports(node, name, graph):
    module = graph.module(node.module_name)
    if name not in {u.name for u in module.header_uses}:
        log.warning(f"{name} is generated but not used in the port list of '{module.name}'")


# Site macros are named relative to the instantiating module: `AUTOMATIC_<instance>
# inside any module, plus `AUTOMATIC_self_<module> for the port list of every module
# that forwards registers of its own lb_automatic instances up to its parent
def emit_instance_macros(tree, regs_by_instance, graph=None, root=None):
    root = root or os.getcwd()
    planner = _PortPlanner(regs_by_instance)
    bodies = {}
    lines = []
    warned = set()

    def define(name, comments, body, node):
        if name == DECODE_MACRO:
            raise _collision(f"instance {node.display_path} would redefine {DECODE_MACRO}", node, graph)
        if name in bodies:
            if bodies[name] != body:
                raise _collision(f"macro {name} is needed with two different bodies; "
                                 f"rename instance {node.display_path}", node, graph)
            return
        bodies[name] = body
        lines.extend(comments)
        lines.extend(_define(name, body, inline_first=True, indent="    "))
        lines.append("")

    for node in tree.walk():
        if node.is_top:
            continue
        gvar = node.gvar if node.gvar is not None else "None"
        gcnt = node.gcnt if node.gcnt is not None else "None"
        site = AUTOMATIC_PREFIX + node.local_name
        conns = [f".{w.name}({join_prefix(node.local_name, w.name)})" for w in planner.ports(node)]
        comments = [f"// module={node.module_name} instance={node.instance_name} gvar={gvar} gcnt={gcnt}"]
        define(site, comments + _sources_comment(node, graph, root), ["," + c for c in conns], node)
        if graph is not None and (node.parent_module, site) not in warned:
            warned.add((node.parent_module, site))
            _warn_unused_site(node, site, graph)

        if not node.children:
            continue
        forwarded = planner.forwarded(node)
        _check_forwarded_ports(node, forwarded, graph)
        ports = SELF_MACRO_PREFIX + node.module_name
        comments = [f"// module={node.module_name} forwarded ports={len(forwarded)}"]
        define(ports, comments, ["," + w.declaration for w in forwarded], node)
        if graph is not None and (node.module_name, ports) not in warned:
            warned.add((node.module_name, ports))
            _warn_unused_ports(node, ports, graph)
    return _text(lines) if lines else ""


# Which site macros each module uses and which macro declares their signals
def instance_macro_scopes(tree):
    sites = {}
    for node in tree.walk():
        if node.is_top:
            continue
        names = sites.setdefault(node.parent_module, [])
        site = AUTOMATIC_PREFIX + node.local_name
        if site not in names:
            names.append(site)
    return tuple(
        MacroScope(module, DECODE_MACRO if module == tree.module_name else SELF_MACRO_PREFIX + module,
                   tuple(names))
        for module, names in sites.items())


def hit_predicate(entry):
    if entry.addr_width == 0:
        return f"(lb_addr[`LB_HI:0]=={entry.base_addr})"
    return f"((lb_addr[`LB_HI:0]&~{entry.mask})=={entry.base_addr})"


def emit_addr_map_header(amap, top, top_file=None):
    lines = [f"`define LB_HI {amap.bus.lb_hi}"]
    lines += _banner(f"addr_map_{top}.vh", top_file or f"{top}.v")
    for e in amap.entries:
        lines.append(f"// {e.name} bw: {e.addr_width}, base_addr: {e.base_addr}")
        lines.append(f"`define {HIT_PREFIX}{e.name} {hit_predicate(e)}")
    return _text(lines)


def _vector(reg):
    sign = "signed " if reg.sign == "signed" else ""
    return f"{sign}[{reg.data_width - 1}:0]"


# `AUTOMATIC_decode: storage, strobes, the lb_clk write/read block and one
# re-register block per extra clock domain
def emit_decoder(amap):
    decls = []
    declared = {}
    defaults = []
    writes = []
    reads = []
    crossings = {}

    def declare(signal, text, reg):
        if signal in declared:
            raise reg.error(f"decoder signal '{signal}' is needed by both '{declared[signal].full_name}' "
                            f"and '{reg.full_name}'", DecoderError)
        declared[signal] = reg
        decls.append(text)

    for e in amap.entries:
        reg = e.register
        name = reg.full_name
        vec = _vector(reg)
        cross = reg.clock_domain != DEFAULT_CLOCK_DOMAIN
        if reg.has_read_strobe and cross:
            raise reg.error(f"'{name}' is plus-re in clock domain '{reg.clock_domain}'; "
                            f"read strobes exist only in the lb domain", DecoderError)

        if reg.has_read_strobe:
            declare(name + RE_SUFFIX, f"reg {name}{RE_SUFFIX}=0;", reg)
            defaults.append(f"{name}{RE_SUFFIX} <= 1'b0;")
            reads.append(f"if (`{HIT_PREFIX}{name}) begin {name}{RE_SUFFIX} <= 1'b1; end")

        if not reg.writable:
            declare(name, f"wire {vec} {name};", reg)
            continue

        store = f"{name}_cap" if cross else name
        declare(store, f"reg {vec} {store}=0;", reg)
        stmts = [f"{store} <= lb_data[{reg.data_width - 1}:0];"]
        if reg.has_write_strobe:
            declare(store + WE_SUFFIX, f"reg {store}{WE_SUFFIX}=0;", reg)
            defaults.append(f"{store}{WE_SUFFIX} <= 1'b0;")
            stmts.append(f"{store}{WE_SUFFIX} <= 1'b1;")
        if reg.signal_type == SINGLE_CYCLE:
            defaults.append(f"{store} <= {reg.data_width}'d0;")
        writes.append(f"if (`{HIT_PREFIX}{name}) begin {' '.join(stmts)} end")

        if cross:
            block = crossings.setdefault(reg.clock_domain, [])
            declare(name, f"reg {vec} {name}=0;", reg)
            block.append(f"{name} <= {store};")
            if reg.has_write_strobe:
                declare(name + WE_SUFFIX, f"reg {name}{WE_SUFFIX}=0;", reg)
                block.append(f"{name}{WE_SUFFIX} <= {store}{WE_SUFFIX};")

    body = list(decls)
    if defaults or writes or reads:
        body.append("always @(posedge lb_clk) begin")
        body += ["    " + s for s in defaults]
        for qualifier, stmts in (("lb_write", writes), ("lb_read", reads)):
            if stmts:
                body.append(f"    if ({qualifier}) begin")
                body += ["        " + s for s in stmts]
                body.append("    end")
        body.append("end")
    for domain in sorted(crossings):
        body.append(f"always @(posedge {domain}_clk) begin")
        body += ["    " + s for s in crossings[domain]]
        body.append("end")

    domains = sorted({e.register.clock_domain for e in amap.entries},
                     key=lambda d: (d != DEFAULT_CLOCK_DOMAIN, d))
    summary = f"// decoder: {len(amap.entries)} registers, clock domains: {' '.join(domains) or 'none'}"
    return _text([summary] + _define(DECODE_MACRO, body))


def json_record(entry):
    reg = entry.register
    return {
        "access":      reg.access,
        "addr_width":  entry.addr_width,
        "base_addr":   entry.base_addr,
        "data_width":  reg.data_width,
        "description": reg.description,
        "sign":        reg.sign,
    }


def emit_json(amap):
    obj = {e.name: json_record(e) for e in amap.entries}
    return json.dumps(obj, indent=4, sort_keys=True) + "\n"


def doc_rows(amap):
    digits = max(1, (amap.bus.lb_hi + 4) // 4)
    rows = []
    for e in amap.entries:
        reg = e.register
        rows.append([e.name, f"0x{e.base_addr:0{digits}x}", str(reg.data_width), reg.access, reg.sign,
                     reg.clock_domain, escape_markdown(reg.description)])
    return rows


def emit_docs(amap, top=None):
    bus = amap.bus
    lines = [f"# Register map for {top}" if top else "# Register map", ""]
    lines.append(f"- Address space: {bus.space} addresses (LB_HI = {bus.lb_hi})")
    lines.append(f"- Base offset: {bus.base_offset} (0x{bus.base_offset:x})")
    lines.append(f"- Data width: {bus.data_width} bits")
    lines.append(f"- Registers: {len(amap.entries)}")
    lines.append("")
    lines.append(tabulate(doc_rows(amap), headers=DOC_HEADERS, tablefmt="github", disable_numparse=True))
    return _text(lines)


# Console rendering of the same rows, in the grid style used for result tables
def render_table(amap):
    rows = [row[:-1] + [row[-1].replace("\\|", "|")] for row in doc_rows(amap)]
    colalign = ["center"] * len(DOC_HEADERS) if rows else None
    return tabulate(rows, headers=DOC_HEADERS, tablefmt="grid", colalign=colalign, disable_numparse=True)


def emit_artifacts(tree, regs, amap, top_file, gen_decoder=True, graph=None):
    top = tree.module_name
    root = os.path.dirname(os.path.abspath(top_file))
    top_name = os.path.basename(top_file)

    auto = _banner(f"{top}_auto.vh", top_name) + [""]
    auto.append(emit_instance_macros(tree, group_by_instance(regs), graph, root))
    if gen_decoder:
        auto.append(emit_decoder(amap))

    return EmittedArtifacts(
        top=top,
        auto_header=_text(auto),
        addr_header=emit_addr_map_header(amap, top, top_name),
        json_map=emit_json(amap),
        docs=emit_docs(amap, top),
        scopes=instance_macro_scopes(tree),
    )


# ----------------------------------------------------------------------------------
# Cross checks on emitted text
# ----------------------------------------------------------------------------------

# Join backslash-continued lines into one logical line each
def logical_lines(text):
    out = []
    current = ""
    for line in text.split("\n"):
        if line.endswith("\\"):
            current += line[:-1] + " "
            continue
        out.append(current + line)
        current = ""
    if current:
        out.append(current)
    return out


_DEFINE      = re.compile(r"`define\s+(\w+)\s*(.*)$")
_CONNECTION  = re.compile(r"\.\w+\((\w+)\)")
_DECLARATION = re.compile(r"\b(?:reg|wire|input|output)\s+(?:signed\s+)?(?:\[\d+:\d+\]\s+)?(\w+)")


def macro_bodies(text):
    bodies = {}
    for line in logical_lines(text):
        m = _DEFINE.match(line.strip())
        if m:
            bodies[m.group(1)] = m.group(2)
    return bodies


# Signals a module's site macros connect to but its declaring macro never declares;
# names outside the top module are reported as <module>.<signal>
def check_name_coherence(auto_header, scopes=None):
    bodies = macro_bodies(auto_header)
    if scopes is None:
        sites = tuple(name for name in bodies if name.startswith(AUTOMATIC_PREFIX)
                      and name != DECODE_MACRO and not name.startswith(SELF_MACRO_PREFIX))
        scopes = (MacroScope("", DECODE_MACRO, sites),)
    missing = set()
    for scope in scopes:
        at_top = scope.declared_by == DECODE_MACRO
        if at_top and DECODE_MACRO not in bodies:
            continue
        declared = set(_DECLARATION.findall(bodies.get(scope.declared_by, "")))
        for site in scope.sites:
            for sig in _CONNECTION.findall(bodies.get(site, "")):
                if sig not in declared:
                    missing.add(sig if at_top else f"{scope.module}.{sig}")
    return sorted(missing)


# `AUTOMATIC_* uses in the sources that no macro generated for that module satisfies
def unmatched_macro_uses(graph, tree, gen_decoder=True):
    in_header = {}
    in_body = {}
    for node in tree.walk():
        if node.is_top:
            continue
        in_body.setdefault(node.parent_module, set()).add(AUTOMATIC_PREFIX + node.local_name)
        if node.children:
            in_header.setdefault(node.module_name, set()).add(SELF_MACRO_PREFIX + node.module_name)
    if gen_decoder:
        in_body.setdefault(tree.module_name, set()).add(DECODE_MACRO)
    unmatched = []
    for unit, module in graph.modules.values():
        for uses, generated in ((module.header_uses, in_header), (module.body_uses, in_body)):
            names = generated.get(module.name, set())
            unmatched.extend((unit.path, use) for use in uses if use.name not in names)
    return unmatched
