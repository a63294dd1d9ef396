# ----------------------------------------------------------------------------------
# Module resolution and hierarchy elaboration.
# Starting from the top file, every lb_automatic instantiation is resolved to a
# <module>.v file, parsed once, and the instance tree is built with underscore
# joined prefixes. Replicated instances (gvar/gcnt) expand into one node each.
# ----------------------------------------------------------------------------------

import os
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from tqdm import tqdm

from regmap_gen.constants import *
from regmap_gen.errors import (AmbiguousModuleError, InstantiationCycleError, NameCollisionError,
                               ResolveError, UnresolvedModuleError)
from regmap_gen.functions import get_logger, join_prefix
from regmap_gen.vparse import read_source

log = get_logger("hiertree")

# Kept as a module attribute so tests can count parses
parse_file = read_source


@dataclass
class ModuleGraph:
    top: str
    modules: Dict[str, Tuple[object, object]] = field(default_factory=dict)  # name -> (SourceUnit, ModuleDecl)
    edges: List[Tuple[str, str]] = field(default_factory=list)
    files: Dict[str, object] = field(default_factory=dict)                   # realpath -> SourceUnit

    def module(self, name):
        return self.modules[name][1]

    def unit(self, name):
        return self.modules[name][0]

    def children(self, name):
        return [child for parent, child in self.edges if parent == name]


@dataclass
class InstanceNode:
    module_name: str
    instance_name: str
    prefix: str
    children: List["InstanceNode"] = field(default_factory=list)
    gvar: Optional[str] = None
    gcnt: Optional[int] = None
    replica: Optional[int] = None
    path: Tuple[str, ...] = ()
    instance: Optional[object] = None   # InstanceDecl at the instantiation site
    parent_module: Optional[str] = None

    @property
    def is_top(self):
        return self.instance is None

    @property
    def display_path(self):
        return ".".join(self.path)

    # Name of this node as seen from its parent module
    @property
    def local_name(self):
        if self.replica is None:
            return self.instance_name
        return f"{self.instance_name}_{self.replica}"

    # Depth-first, parents before children, source order
    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


def _candidate_files(name, ref_dir, search_dirs):
    hits = []
    seen = set()
    for d in [ref_dir] + list(search_dirs):
        path = os.path.join(d, f"{name}.v")
        if os.path.isfile(path):
            real = os.path.realpath(path)
            if real not in seen:
                seen.add(real)
                hits.append(path)
    return hits


def _same_content(a, b):
    with open(a, "rb") as fa, open(b, "rb") as fb:
        return fa.read() == fb.read()


# Locate <name>.v: referencing file's directory first, then search_dirs in order
def locate_module(name, ref_path, search_dirs, inst=None):
    hits = _candidate_files(name, os.path.dirname(os.path.abspath(ref_path)), search_dirs)
    line = inst.line if inst is not None else None
    col = inst.col if inst is not None else None
    if not hits:
        where = f" for instance '{inst.instance_name}'" if inst is not None else ""
        raise UnresolvedModuleError(f"cannot find module '{name}'{where}: no {name}.v in search path",
                                    ref_path, line, col)
    for other in hits[1:]:
        if not _same_content(hits[0], other):
            raise AmbiguousModuleError(
                f"module '{name}' found in both {hits[0]} and {other} with different content", ref_path, line, col)
    return hits[0]


# Parse the top file and, transitively, the file of every lb_automatic instantiation
def resolve_modules(top_path, search_dirs=(), progress=False):
    if not os.path.isfile(top_path):
        raise ResolveError(f"top file not found: {top_path}")

    pbar = tqdm(total=1, desc="Parsing Verilog sources", colour="white", disable=not progress, leave=False)
    try:
        cache = {}

        def load(path):
            real = os.path.realpath(path)
            if real not in cache:
                cache[real] = parse_file(path)
                pbar.update(1)
            return real, cache[real]

        real, top_unit = load(top_path)
        stem = os.path.splitext(os.path.basename(top_path))[0]
        top_module = top_unit.module(stem)
        if top_module is None:
            if not top_unit.modules:
                raise ResolveError("top file defines no module", top_path)
            top_module = top_unit.modules[0]
            log.warning(f"{top_path}: no module named '{stem}', using '{top_module.name}' as top")

        graph = ModuleGraph(top=top_module.name)
        graph.files[real] = top_unit
        graph.modules[top_module.name] = (top_unit, top_module)

        pending = deque([top_module.name])
        while pending:
            name = pending.popleft()
            unit, module = graph.modules[name]
            for inst in module.instances:
                if not inst.is_automatic:
                    continue
                graph.edges.append((name, inst.module_name))
                if inst.module_name in graph.modules:
                    continue
                path = locate_module(inst.module_name, unit.path, search_dirs, inst)
                pbar.total += 1
                real, child_unit = load(path)
                graph.files[real] = child_unit
                child = child_unit.module(inst.module_name)
                if child is None:
                    raise UnresolvedModuleError(
                        f"{path} does not define module '{inst.module_name}'", unit.path, inst.line, inst.col)
                graph.modules[inst.module_name] = (child_unit, child)
                pending.append(inst.module_name)
    finally:
        pbar.close()

    _check_acyclic(graph)
    log.info(f"Resolved {len(graph.modules)} modules from {len(graph.files)} files")
    return graph


def _check_acyclic(graph):
    NEW, OPEN, DONE = 0, 1, 2
    state = {name: NEW for name in graph.modules}
    stack = []

    def visit(name):
        state[name] = OPEN
        stack.append(name)
        for child in graph.children(name):
            if state[child] == OPEN:
                cycle = stack[stack.index(child):] + [child]
                unit = graph.unit(name)
                raise InstantiationCycleError("recursive instantiation: " + " -> ".join(cycle), unit.path)
            if state[child] == NEW:
                visit(child)
        stack.pop()
        state[name] = DONE

    for name in graph.modules:
        if state[name] == NEW:
            visit(name)


def _node_label(inst, replica):
    return inst.instance_name if replica is None else f"{inst.instance_name}[{replica}]"


# Depth-first tree mirroring lb_automatic instantiations, replicas expanded
def build_instance_tree(graph, top=None):
    top = top or graph.top
    if top not in graph.modules:
        raise ResolveError(f"top module '{top}' is not in the module graph")

    root = InstanceNode(module_name=top, instance_name=top, prefix="", path=(top,))

    def expand(node):
        module = graph.module(node.module_name)
        for inst in module.instances:
            if not inst.is_automatic:
                continue
            replicas = [None] if inst.gcnt is None else list(range(inst.gcnt))
            for r in replicas:
                name = inst.instance_name if r is None else f"{inst.instance_name}_{r}"
                child = InstanceNode(
                    module_name=inst.module_name,
                    instance_name=inst.instance_name,
                    prefix=join_prefix(node.prefix, name),
                    gvar=inst.gvar,
                    gcnt=inst.gcnt,
                    replica=r,
                    path=node.path + (_node_label(inst, r),),
                    instance=inst,
                    parent_module=node.module_name,
                )
                node.children.append(child)
                expand(child)

    expand(root)
    _check_prefixes(root, graph)
    return root


# Two different instance paths must never join to the same prefix
def _check_prefixes(root, graph):
    owners = {}
    for node in root.walk():
        other = owners.get(node.prefix)
        if other is not None and other.path != node.path:
            unit = graph.unit(node.parent_module) if node.parent_module else None
            raise NameCollisionError(
                f"instances {other.display_path} and {node.display_path} both map to prefix '{node.prefix}'",
                unit.path if unit else None, node.instance.line if node.instance else None,
                node.instance.col if node.instance else None)
        owners[node.prefix] = node
