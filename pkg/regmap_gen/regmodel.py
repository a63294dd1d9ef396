# ----------------------------------------------------------------------------------
# Register model: collect `external` ports from the instance tree and lay them out
# in the local bus address space.
# Allocation rule: descending address width, then ascending name; first fit from
# the base offset with every span aligned to its own size.
# ----------------------------------------------------------------------------------

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Tuple

from regmap_gen.constants import *
from regmap_gen.errors import AllocationError, NameCollisionError, RegisterSpecError
from regmap_gen.functions import get_logger, join_prefix
from regmap_gen.vparse import AttributeSet

log = get_logger("regmodel")

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class RegisterSpec:
    full_name: str
    port_name: str
    instance_path: str
    data_width: int
    sign: str = "unsigned"
    access: str = "rw"
    signal_type: str = PLAIN
    clock_domain: str = DEFAULT_CLOCK_DOMAIN
    description: str = ""
    has_trailing_we: bool = False
    attrs: AttributeSet = AttributeSet()
    prefix: str = ""
    module_name: str = ""
    port_index: int = 0
    source: Optional[str] = field(default=None, compare=False)
    line: Optional[int] = field(default=None, compare=False)
    col: Optional[int] = field(default=None, compare=False)

    @property
    def writable(self):
        return self.access == "rw"

    @property
    def has_write_strobe(self):
        return self.has_trailing_we or self.signal_type == PLUS_WE

    @property
    def has_read_strobe(self):
        return self.signal_type == PLUS_RE

    def error(self, message, cls=RegisterSpecError):
        return cls(message, self.source, self.line, self.col)


@dataclass(frozen=True)
class BusConfig:
    lb_hi: int = DEFAULT_LB_HI
    base_offset: int = DEFAULT_BASE
    data_width: int = DATA_WIDTH

    def __post_init__(self):
        if self.lb_hi < 0:
            raise ValueError(f"lb_hi must be non-negative, got {self.lb_hi}")
        if not 0 <= self.base_offset < self.space:
            raise ValueError(f"base offset {self.base_offset} outside the {self.space}-address space")

    @property
    def space(self):
        return 1 << (self.lb_hi + 1)


@dataclass(frozen=True)
class AddressMapEntry:
    register: RegisterSpec
    base_addr: int
    addr_width: int = 0

    @property
    def name(self):
        return self.register.full_name

    @property
    def size(self):
        return 1 << self.addr_width

    @property
    def end(self):
        return self.base_addr + self.size

    @property
    def mask(self):
        return self.size - 1

    def contains(self, addr):
        return self.base_addr <= addr < self.end


@dataclass(frozen=True)
class AddressMap:
    bus: BusConfig
    entries: Tuple[AddressMapEntry, ...] = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def entry(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def names(self):
        return [e.name for e in self.entries]

    @property
    def used(self):
        return sum(e.size for e in self.entries)


# Registers that would never be routed: an instantiation without lb_automatic
# of a module that does declare external ports
def _check_unreachable(graph):
    for name, (unit, module) in graph.modules.items():
        for inst in module.instances:
            if inst.is_automatic or inst.module_name not in graph.modules:
                continue
            target = graph.module(inst.module_name)
            if any(ATTR_EXTERNAL in p.attrs for p in target.ports):
                raise RegisterSpecError(
                    f"instance '{inst.instance_name}' of '{inst.module_name}' is not marked lb_automatic, "
                    f"but '{inst.module_name}' has external ports; its registers would be unreachable",
                    unit.path, inst.line, inst.col)


def _register_from_port(node, module, unit, port, index):
    def fail(message):
        return RegisterSpecError(message, unit.path, port.line, port.col)

    attrs = port.attrs
    if port.direction == "inout":
        raise fail(f"external port '{port.name}' of '{module.name}' cannot be inout")

    if ATTR_SIGNAL_TYPE in attrs and attrs.get(ATTR_SIGNAL_TYPE) is None:
        raise fail(f"attribute 'signal_type' on '{port.name}' needs a value")
    signal_type = attrs.get(ATTR_SIGNAL_TYPE) or PLAIN
    if signal_type not in SIGNAL_TYPES:
        raise fail(f"unknown signal_type '{signal_type}' on '{port.name}' (expected one of {', '.join(SIGNAL_TYPES)})")

    if port.width > DATA_WIDTH:
        raise fail(f"external port '{port.name}' is {port.width} bits wide, the bus carries {DATA_WIDTH}")

    clock_domain = attrs.get(ATTR_CLOCK_DOMAIN) or DEFAULT_CLOCK_DOMAIN
    if not _IDENTIFIER.match(clock_domain):
        raise fail(f"clock domain '{clock_domain}' on '{port.name}' is not an identifier")

    strobe = module.port(port.name + WE_SUFFIX)
    if strobe is not None and strobe.width != 1:
        raise RegisterSpecError(
            f"strobe port '{strobe.name}' of '{port.name}' in '{module.name}' must be 1 bit wide, "
            f"is {strobe.width}", unit.path, strobe.line, strobe.col)

    # read-only registers take no write side
    if port.direction == "output":
        if signal_type in (PLUS_WE, SINGLE_CYCLE):
            raise fail(f"read-only external port '{port.name}' cannot have signal_type '{signal_type}'")
        if strobe is not None:
            raise RegisterSpecError(
                f"read-only external port '{port.name}' cannot have a write strobe '{strobe.name}'",
                unit.path, strobe.line, strobe.col)

    return RegisterSpec(
        full_name=join_prefix(node.prefix, port.name),
        port_name=port.name,
        instance_path=node.display_path,
        data_width=port.width,
        sign="signed" if port.signed else "unsigned",
        access="r" if port.direction == "output" else "rw",
        signal_type=signal_type,
        clock_domain=clock_domain,
        description=attrs.get(ATTR_DESCRIPTION) or "",
        has_trailing_we=strobe is not None,
        attrs=attrs,
        prefix=node.prefix,
        module_name=module.name,
        port_index=index,
        source=unit.path,
        line=port.line,
        col=port.col,
    )


# One RegisterSpec per external port per replica, sorted by full name
def collect_registers(tree, graph):
    _check_unreachable(graph)
    regs = []
    for node in tree.walk():
        unit, module = graph.modules[node.module_name]
        externals = [p for p in module.ports if ATTR_EXTERNAL in p.attrs]
        if not externals:
            continue
        if node.is_top:
            p = externals[0]
            raise RegisterSpecError(
                f"top module '{module.name}' declares external port '{p.name}'; "
                f"only instantiated modules can be routed", unit.path, p.line, p.col)
        absorbed = {p.name + WE_SUFFIX for p in externals}
        for index, port in enumerate(module.ports):
            if ATTR_EXTERNAL in port.attrs and port.name not in absorbed:
                regs.append(_register_from_port(node, module, unit, port, index))

    owners = {}
    for reg in regs:
        other = owners.get(reg.full_name)
        if other is not None:
            raise reg.error(
                f"register name '{reg.full_name}' produced by both {other.instance_path}.{other.port_name} "
                f"and {reg.instance_path}.{reg.port_name}", NameCollisionError)
        owners[reg.full_name] = reg

    regs.sort(key=lambda r: r.full_name)
    log.info(f"Collected {len(regs)} registers")
    return regs


def group_by_instance(regs):
    groups = defaultdict(list)
    for reg in regs:
        groups[reg.prefix].append(reg)
    for group in groups.values():
        group.sort(key=lambda r: r.port_index)
    return dict(groups)


# Number of address bits a register spans; `aw` turns it into a memory-style block
def addr_width_of(reg):
    if ATTR_ADDR_WIDTH not in reg.attrs:
        return 0
    raw = reg.attrs.get(ATTR_ADDR_WIDTH)
    if raw is None or not re.fullmatch(r"[0-9]+", raw):
        raise reg.error(f"attribute aw={raw!r} on '{reg.full_name}' is not a non-negative integer")
    return int(raw)


def allocate(regs, bus=None):
    bus = bus or BusConfig()
    names = [r.full_name for r in regs]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise AllocationError(f"duplicate register names: {', '.join(dupes)}")

    space = bus.space
    widths = {r.full_name: addr_width_of(r) for r in regs}
    order = sorted(regs, key=lambda r: (-widths[r.full_name], r.full_name))

    cursor = bus.base_offset
    entries = []
    for reg in order:
        aw = widths[reg.full_name]
        size = 1 << aw
        base = (cursor + size - 1) & ~(size - 1)
        if base + size > space:
            raise reg.error(
                f"address space exhausted placing '{reg.full_name}' ({size} addresses at {base}); "
                f"LB_HI={bus.lb_hi} gives {space} addresses", AllocationError)
        entries.append(AddressMapEntry(reg, base, aw))
        cursor = base + size

    entries.sort(key=lambda e: e.name)
    amap = AddressMap(bus, tuple(entries))
    log.info(f"Allocated {len(entries)} registers, {amap.used} of {space - bus.base_offset} addresses used")
    return amap
