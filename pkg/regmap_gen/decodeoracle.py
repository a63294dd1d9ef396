# ----------------------------------------------------------------------------------
# Software reference model of the local bus decoder.
#
# Cycle model: one transaction per cycle. A write at cycle t is visible in the
# lb-domain state of snapshot t+1 and, for registers in any other clock domain,
# in snapshot t+2 (capture register plus re-register). Write and read strobes
# are high for exactly one snapshot. single-cycle registers return to 0 one
# snapshot after they took the written value.
# ----------------------------------------------------------------------------------

import re
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from regmap_gen.constants import *
from regmap_gen.errors import VerificationError
from regmap_gen.regmodel import AddressMap, AddressMapEntry, BusConfig, RegisterSpec

TRANSACTION_KINDS = ("write", "read", "idle")
JSON_KEYS = frozenset(("access", "addr_width", "base_addr", "data_width", "description", "sign"))


@dataclass(frozen=True)
class BusTransaction:
    cycle: int
    kind: str = "idle"
    addr: int = 0
    data: int = 0

    def __post_init__(self):
        if self.kind not in TRANSACTION_KINDS:
            raise ValueError(f"transaction kind must be one of {TRANSACTION_KINDS}, got {self.kind!r}")
        if self.cycle < 0 or self.addr < 0:
            raise ValueError(f"cycle and addr must be non-negative, got cycle={self.cycle} addr={self.addr}")
        if not 0 <= self.data < (1 << DATA_WIDTH):
            raise ValueError(f"data {self.data:#x} does not fit the {DATA_WIDTH}-bit bus")

    @classmethod
    def write(cls, cycle, addr, data):
        return cls(cycle, "write", addr, data)

    @classmethod
    def read(cls, cycle, addr):
        return cls(cycle, "read", addr)


@dataclass
class RegisterStore:
    values: Dict[str, int] = field(default_factory=dict)
    strobes: Dict[str, bool] = field(default_factory=dict)
    read_strobes: Dict[str, bool] = field(default_factory=dict)

    @classmethod
    def initial(cls, amap):
        regs = [e.register for e in amap.entries]
        return cls(
            values={r.full_name: 0 for r in regs},
            strobes={r.full_name: False for r in regs if r.has_write_strobe},
            read_strobes={r.full_name: False for r in regs if r.has_read_strobe},
        )

    def copy(self):
        return RegisterStore(dict(self.values), dict(self.strobes), dict(self.read_strobes))


def _masked(amap, addr):
    return addr & (amap.bus.space - 1)


def decode(amap, addr):
    a = _masked(amap, addr)
    for e in amap.entries:
        if e.contains(a):
            return e.name, a - e.base_addr
    return None


# Owner index per address (-1 where nothing decodes); later entries win on overlap
def decode_table(amap):
    space = amap.bus.space
    owner = np.full(space, -1, dtype=np.int32)
    for i, e in enumerate(amap.entries):
        owner[e.base_addr:min(e.end, space)] = i
    return owner


def simulate_write_sequence(amap, txns, extra_cycles=3):
    entries = {e.name: e for e in amap.entries}
    sets = defaultdict(list)      # snapshot -> [(name, value, strobe)]
    clears = defaultdict(list)    # snapshot -> [name]
    reads = defaultdict(list)     # snapshot -> [name]

    last = -1
    for txn in txns:
        if txn.cycle <= last:
            raise ValueError(f"transactions must have strictly increasing cycles, got {txn.cycle} after {last}")
        last = txn.cycle
        if txn.kind == "idle":
            continue
        hit = decode(amap, txn.addr)
        if hit is None:
            continue
        reg = entries[hit[0]].register
        if txn.kind == "read":
            if reg.has_read_strobe:
                reads[txn.cycle + 1].append(reg.full_name)
            continue
        if not reg.writable:
            continue
        visible = txn.cycle + (1 if reg.clock_domain == DEFAULT_CLOCK_DOMAIN else 2)
        value = txn.data & ((1 << reg.data_width) - 1)
        sets[visible].append((reg.full_name, value, reg.has_write_strobe))
        if reg.signal_type == SINGLE_CYCLE:
            clears[visible + 1].append(reg.full_name)

    state = RegisterStore.initial(amap)
    trace = [state.copy()]
    for snapshot in range(1, last + extra_cycles + 1):
        state = state.copy()
        for name in state.strobes:
            state.strobes[name] = False
        for name in state.read_strobes:
            state.read_strobes[name] = False
        for name in clears.get(snapshot, ()):
            state.values[name] = 0
        for name, value, strobe in sets.get(snapshot, ()):
            state.values[name] = value
            if strobe:
                state.strobes[name] = True
        for name in reads.get(snapshot, ()):
            state.read_strobes[name] = True
        trace.append(state)
    return trace


# ----------------------------------------------------------------------------------
# Map verification
# ----------------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    names: Tuple[str, ...] = ()
    addr: Optional[int] = None


@dataclass
class VerificationReport:
    violations: List[Violation] = field(default_factory=list)
    addresses_used: int = 0

    @property
    def ok(self):
        return not self.violations

    def summary(self):
        if self.ok:
            return f"ok ({self.addresses_used} addresses decoded)"
        return "\n".join(v.message for v in self.violations)

    def raise_for_violations(self, what="address map"):
        if not self.ok:
            raise VerificationError(f"{what} failed verification:\n" + self.summary())


def verify_map(amap):
    bus = amap.bus
    space = bus.space
    report = VerificationReport()
    add = report.violations.append

    seen = set()
    for e in amap.entries:
        if e.name in seen:
            add(Violation("duplicate", f"{e.name} appears more than once", (e.name,)))
        seen.add(e.name)
        if e.base_addr % e.size:
            add(Violation("alignment", f"{e.name} at {e.base_addr} is not aligned to its {e.size}-address span",
                          (e.name,), e.base_addr))
        if e.base_addr < bus.base_offset:
            add(Violation("bound", f"{e.name} at {e.base_addr} lies below the base offset {bus.base_offset}",
                          (e.name,), e.base_addr))
        if e.end > space:
            add(Violation("bound", f"{e.name} span [{e.base_addr}, {e.end}) exceeds the {space}-address space",
                          (e.name,), e.base_addr))
        if not 1 <= e.register.data_width <= bus.data_width:
            add(Violation("width", f"{e.name} is {e.register.data_width} bits wide, bus carries {bus.data_width}",
                          (e.name,)))

    ordered = sorted(amap.entries, key=lambda e: (e.base_addr, e.name))
    overlapping = set()
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if b.base_addr >= a.end:
                break
            overlapping.update((a.name, b.name))
            add(Violation("overlap", f"{a.name} and {b.name} both decode address {b.base_addr}",
                          (a.name, b.name), b.base_addr))

    # Independent sweep: every address of every non-overlapping span decodes to its entry
    counts = np.zeros(space, dtype=np.int32)
    for e in amap.entries:
        counts[e.base_addr:min(e.end, space)] += 1
    owner = decode_table(amap)
    for i, e in enumerate(amap.entries):
        if e.name in overlapping:
            continue
        span = owner[e.base_addr:min(e.end, space)]
        if span.size and not np.all(span == i):
            add(Violation("span", f"{e.name} does not own every address of its span", (e.name,), e.base_addr))
    if overlapping == set() and np.any(counts > 1):
        addr = int(np.argmax(counts > 1))
        add(Violation("overlap", f"address {addr} decodes to more than one entry", (), addr))

    report.addresses_used = int(np.count_nonzero(counts))
    return report


# ----------------------------------------------------------------------------------
# HIT header evaluation
# ----------------------------------------------------------------------------------

_LB_HI_DEFINE = re.compile(r"`define\s+LB_HI\s+(\d+)\s*$")
_HIT_DEFINE   = re.compile(r"`define\s+HIT_(\w+)\s+(.*?)\s*$")
_HIT_EQUAL    = re.compile(r"\(lb_addr\[`LB_HI:0\]==(\d+)\)$")
_HIT_MASKED   = re.compile(r"\(\(lb_addr\[`LB_HI:0\]&~(\d+)\)==(\d+)\)$")


@dataclass(frozen=True)
class HitPredicate:
    name: str
    base: int
    mask: int = 0

    # Works on a scalar or on a numpy array of already masked addresses
    def matches(self, addr):
        return (addr & ~self.mask) == self.base


@dataclass(frozen=True)
class HitHeader:
    lb_hi: int
    predicates: Tuple[HitPredicate, ...] = ()

    @property
    def space(self):
        return 1 << (self.lb_hi + 1)

    # Per address: number of true predicates and index of the last true one
    def table(self):
        addrs = np.arange(self.space, dtype=np.int64)
        counts = np.zeros(self.space, dtype=np.int32)
        owner = np.full(self.space, -1, dtype=np.int32)
        for i, p in enumerate(self.predicates):
            hit = p.matches(addrs)
            counts += hit
            owner[hit] = i
        return counts, owner


def parse_hit_defines(text):
    lb_hi = None
    predicates = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        m = _LB_HI_DEFINE.match(line)
        if m:
            lb_hi = int(m.group(1))
            continue
        m = _HIT_DEFINE.match(line)
        if not m:
            continue
        name, expr = m.groups()
        eq = _HIT_EQUAL.match(expr)
        masked = _HIT_MASKED.match(expr)
        if eq:
            predicates.append(HitPredicate(name, int(eq.group(1))))
        elif masked:
            predicates.append(HitPredicate(name, int(masked.group(2)), int(masked.group(1))))
        else:
            raise VerificationError(f"unrecognised HIT predicate for '{name}': {expr}", line=lineno)
    if lb_hi is None:
        raise VerificationError("address header has no `define LB_HI")
    return HitHeader(lb_hi, tuple(predicates))


# Oracle decode and the header's HIT predicates must agree at every address
def check_hit_agreement(amap, addr_header):
    header = parse_hit_defines(addr_header)
    report = VerificationReport()
    add = report.violations.append
    if header.lb_hi != amap.bus.lb_hi:
        add(Violation("lb_hi", f"header LB_HI is {header.lb_hi}, map uses {amap.bus.lb_hi}"))
        return report

    header_names = sorted(p.name for p in header.predicates)
    if header_names != sorted(amap.names):
        missing = sorted(set(amap.names) - set(header_names))
        extra = sorted(set(header_names) - set(amap.names))
        add(Violation("names", f"HIT defines and map disagree: missing {missing}, extra {extra}",
                      tuple(missing + extra)))
        return report

    counts, hit_owner = header.table()
    multi = np.flatnonzero(counts > 1)
    if multi.size:
        addr = int(multi[0])
        names = tuple(p.name for p in header.predicates if p.matches(addr))
        add(Violation("multiple-hit", f"{multi.size} addresses hit more than one predicate, first {addr}: "
                      f"{', '.join(names)}", names, addr))

    owner = decode_table(amap)
    index = {p.name: i for i, p in enumerate(header.predicates)}
    expected = np.full(owner.shape, -1, dtype=np.int32)
    for i, e in enumerate(amap.entries):
        expected[owner == i] = index[e.name]
    diff = np.flatnonzero(expected != hit_owner)
    if diff.size:
        addr = int(diff[0])
        oracle = decode(amap, addr)
        hit = header.predicates[hit_owner[addr]].name if hit_owner[addr] >= 0 else None
        add(Violation("disagreement", f"{diff.size} addresses disagree, first {addr}: oracle "
                      f"{oracle[0] if oracle else None}, HIT {hit}", (), addr))

    report.addresses_used = int(np.count_nonzero(counts))
    return report


def check_hit_json_agreement(addr_header, json_text):
    header = parse_hit_defines(addr_header)
    return check_hit_agreement(load_json_map(json_text, lb_hi=header.lb_hi), addr_header)


# The emitted JSON map as oracle input; registers carry no strobes
def load_json_map(text, lb_hi=DEFAULT_LB_HI, base_offset=DEFAULT_BASE):
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("register map JSON must be an object")
    entries = []
    for name, record in obj.items():
        if not isinstance(record, dict) or set(record) != JSON_KEYS:
            raise ValueError(f"register '{name}' must have exactly the keys {sorted(JSON_KEYS)}")
        reg = RegisterSpec(
            full_name=name,
            port_name=name,
            instance_path="",
            data_width=int(record["data_width"]),
            sign=record["sign"],
            access=record["access"],
            description=record["description"],
        )
        entries.append(AddressMapEntry(reg, int(record["base_addr"]), int(record["addr_width"])))
    entries.sort(key=lambda e: e.name)
    return AddressMap(BusConfig(lb_hi=lb_hi, base_offset=base_offset), tuple(entries))
