# ----------------------------------------------------------------------------------
# Tokenizer and subset parser for Verilog sources.
# Only what the register map needs is modelled: ANSI module headers with port
# attributes, attributed instantiations, and `AUTOMATIC_* macro uses. Everything
# else inside a module body is skipped by balanced-token scanning.
# ----------------------------------------------------------------------------------

import re
from enum import Enum
from dataclasses import dataclass, field
from typing import Optional, Tuple

from regmap_gen.constants import *
from regmap_gen.errors import VerilogLexError, VerilogSyntaxError
from regmap_gen.functions import get_logger

log = get_logger("vparse")


class TokenKind(Enum):
    IDENTIFIER = "identifier"
    NUMBER     = "number"
    STRING     = "string"
    PUNCT      = "punctuation"
    ATTR_OPEN  = "attribute-open"
    ATTR_CLOSE = "attribute-close"
    MACRO      = "macro-use"
    DIRECTIVE  = "directive"
    KEYWORD    = "keyword"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class AttributeSet:
    entries: Tuple[Tuple[str, Optional[str]], ...] = ()

    def get(self, key, default=None):
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def keys(self):
        return [k for k, _ in self.entries]

    def __contains__(self, key):
        return any(k == key for k, _ in self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class PortDecl:
    name: str
    direction: str
    msb: Optional[int] = None
    lsb: Optional[int] = None
    signed: bool = False
    attrs: AttributeSet = AttributeSet()
    net: Optional[str] = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    @property
    def width(self):
        if self.msb is None:
            return 1
        return abs(self.msb - self.lsb) + 1


@dataclass(frozen=True)
class InstanceDecl:
    module_name: str
    instance_name: str
    attrs: AttributeSet = AttributeSet()
    has_automatic_macro: bool = False
    gvar: Optional[str] = None
    gcnt: Optional[int] = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    @property
    def is_automatic(self):
        return ATTR_AUTOMATIC in self.attrs


@dataclass(frozen=True)
class MacroUse:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ModuleDecl:
    name: str
    ports: Tuple[PortDecl, ...] = ()
    instances: Tuple[InstanceDecl, ...] = ()
    automatic_uses: Tuple[MacroUse, ...] = ()    # header uses first, then body uses
    header_uses: Tuple[MacroUse, ...] = ()       # `AUTOMATIC_* inside the port list
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def port(self, name):
        for p in self.ports:
            if p.name == name:
                return p
        return None

    @property
    def body_uses(self):
        return self.automatic_uses[len(self.header_uses):]


@dataclass(frozen=True)
class SourceUnit:
    path: str
    modules: Tuple[ModuleDecl, ...] = ()

    def module(self, name):
        for m in self.modules:
            if m.name == name:
                return m
        return None


# ----------------------------------------------------------------------------------
# Tokenizer
# ----------------------------------------------------------------------------------

_WHITESPACE    = re.compile(r"[ \t\f\v\n]+")
_IDENT         = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_ESCAPED_IDENT = re.compile(r"\\\S+")
_SYSTEM_IDENT  = re.compile(r"\$[A-Za-z0-9_$]+")
_NUMBER        = re.compile(
    r"(?:[0-9][0-9_]*\s*)?'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ?_]+"
    r"|[0-9][0-9_]*(?:\.[0-9_]+)?(?:[eE][+-]?[0-9_]+)?"
)
_DECIMAL       = re.compile(r"[0-9][0-9_]*")
_DIRECTIVE_ARG = re.compile(r"[ \t]+[A-Za-z_][A-Za-z0-9_$]*")
_EVENT_STAR    = re.compile(r"\(\*[ \t\f\v\n]*\)")
_PUNCTUATION   = (
    "<<<", ">>>", "===", "!==",
    "<=", ">=", "==", "!=", "&&", "||", "<<", ">>", "**", "->", "+:", "-:",
    "~&", "~|", "~^", "^~",
    "(", ")", "[", "]", "{", "}", ";", ":", ",", ".", "#", "@", "=", "+", "-",
    "*", "/", "%", "&", "|", "^", "~", "!", "?", "<", ">", "'",
)


class _Cursor:
    # Tracks line/col while the tokenizer jumps forward through the text
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.line = 1
        self.line_start = 0

    @property
    def col(self):
        return self.pos - self.line_start + 1

    def advance(self, newpos):
        chunk = self.text[self.pos:newpos]
        newlines = chunk.count("\n")
        if newlines:
            self.line += newlines
            self.line_start = self.pos + chunk.rindex("\n") + 1
        self.pos = newpos


def normalize_newlines(text):
    return text.replace("\r\n", "\n").replace("\r", "\n")


# Split Verilog text into tokens; comments and whitespace only move the cursor
def tokenize(text, path="<string>"):
    text = normalize_newlines(text)
    cur = _Cursor(text)
    tokens = []
    attr_depth = 0
    n = len(text)

    def emit(kind, end):
        tokens.append(Token(kind, text[cur.pos:end], cur.line, cur.col))
        cur.advance(end)

    while cur.pos < n:
        pos = cur.pos
        ch = text[pos]

        m = _WHITESPACE.match(text, pos)
        if m:
            cur.advance(m.end())
            continue

        if text.startswith("//", pos):
            end = text.find("\n", pos)
            cur.advance(n if end < 0 else end)
            continue

        if text.startswith("/*", pos):
            end = text.find("*/", pos + 2)
            if end < 0:
                raise VerilogLexError("unterminated block comment", path, cur.line, cur.col)
            cur.advance(end + 2)
            continue

        if ch == '"':
            i = pos + 1
            while i < n and text[i] not in '"\n':
                i += 2 if text[i] == "\\" else 1
            if i >= n or text[i] != '"':
                raise VerilogLexError("unterminated string literal", path, cur.line, cur.col)
            emit(TokenKind.STRING, i + 1)
            continue

        if text.startswith("(*", pos):
            # `@(*)` and `@(* )` are event controls, not attributes
            if _EVENT_STAR.match(text, pos):
                emit(TokenKind.PUNCT, pos + 1)
                emit(TokenKind.PUNCT, pos + 2)
                continue
            attr_depth += 1
            emit(TokenKind.ATTR_OPEN, pos + 2)
            continue

        if attr_depth and text.startswith("*)", pos):
            attr_depth -= 1
            emit(TokenKind.ATTR_CLOSE, pos + 2)
            continue

        if ch == "`":
            m = _IDENT.match(text, pos + 1)
            if not m:
                raise VerilogLexError("stray '`' without a macro name", path, cur.line, cur.col)
            name = m.group(0)
            if name in LINE_DIRECTIVES:
                emit(TokenKind.DIRECTIVE, _directive_line_end(text, m.end()))
            elif name in ARG_DIRECTIVES:
                arg = _DIRECTIVE_ARG.match(text, m.end())
                emit(TokenKind.DIRECTIVE, arg.end() if arg else m.end())
            elif name in BARE_DIRECTIVES:
                emit(TokenKind.DIRECTIVE, m.end())
            else:
                emit(TokenKind.MACRO, m.end())
            continue

        m = _IDENT.match(text, pos)
        if m:
            kind = TokenKind.KEYWORD if m.group(0) in KEYWORDS else TokenKind.IDENTIFIER
            emit(kind, m.end())
            continue

        m = _ESCAPED_IDENT.match(text, pos) or _SYSTEM_IDENT.match(text, pos)
        if m:
            emit(TokenKind.IDENTIFIER, m.end())
            continue

        if ch.isdigit() or ch == "'":
            m = _NUMBER.match(text, pos)
            if m:
                emit(TokenKind.NUMBER, m.end())
                continue

        for punct in _PUNCTUATION:
            if text.startswith(punct, pos):
                emit(TokenKind.PUNCT, pos + len(punct))
                break
        else:
            raise VerilogLexError(f"unexpected character {ch!r}", path, cur.line, cur.col)

    return tokens


# End of a line-swallowing directive, following backslash continuations
def _directive_line_end(text, pos):
    while True:
        end = text.find("\n", pos)
        if end < 0:
            return len(text)
        if text[end - 1] != "\\":
            return end
        pos = end + 1


_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


def _unquote(text):
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), text[1:-1])


def _quote(value):
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


# ----------------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------------

_CLOSERS = frozenset(BLOCK_PAIRS.values())
_CLOSING_BRACKETS = frozenset(BRACKET_PAIRS.values())
_GVAR = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class _Parser:

    def __init__(self, tokens, path):
        self.tokens = tokens
        self.path = path
        self.pos = 0

    def peek(self, offset=0):
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def at(self, kind, text=None, offset=0):
        tok = self.peek(offset)
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    def at_punct(self, text, offset=0):
        return self.at(TokenKind.PUNCT, text, offset)

    def error(self, message, tok=None):
        if tok is None:
            tok = self.peek()
        if tok is None:
            # End of input: point at the last token so the position stays inside the file
            tok = self.tokens[-1] if self.tokens else Token(TokenKind.PUNCT, "", 1, 1)
        return VerilogSyntaxError(message, self.path, tok.line, tok.col)

    def expect(self, kind, text=None, what=None):
        if self.at(kind, text):
            return self.next()
        tok = self.peek()
        found = f"'{tok.text}'" if tok else "end of file"
        label = what or (repr(text) if text else kind.value)
        raise self.error(f"expected {label}, found {found}")

    # Skip a bracketed group whose opener was just consumed
    def skip_balanced(self, opener):
        stack = [BRACKET_PAIRS[opener.text]]
        while stack:
            tok = self.next()
            if tok is None:
                raise self.error(f"unbalanced '{opener.text}'", opener)
            if tok.kind == TokenKind.PUNCT:
                if tok.text in BRACKET_PAIRS:
                    stack.append(BRACKET_PAIRS[tok.text])
                elif tok.text in _CLOSING_BRACKETS:
                    if tok.text != stack[-1]:
                        raise self.error(f"unbalanced '{tok.text}'", tok)
                    stack.pop()

    def parse_attributes(self):
        opener = self.expect(TokenKind.ATTR_OPEN, what="'(*'")
        entries = []
        seen = set()
        if self.at(TokenKind.ATTR_CLOSE):
            self.next()
            return AttributeSet()
        while True:
            key = self.peek()
            if key is None:
                raise self.error("missing '*)' to close attribute", opener)
            if key.kind not in (TokenKind.IDENTIFIER, TokenKind.KEYWORD):
                raise self.error(f"expected attribute name, found '{key.text}'", key)
            self.next()
            if key.text in seen:
                raise self.error(f"duplicate attribute '{key.text}'", key)
            seen.add(key.text)
            value = None
            if self.at_punct("="):
                self.next()
                tok = self.peek()
                if tok is not None and tok.kind == TokenKind.STRING:
                    value = _unquote(tok.text)
                elif tok is not None and tok.kind == TokenKind.NUMBER and _DECIMAL.fullmatch(tok.text):
                    value = tok.text.replace("_", "")
                else:
                    raise self.error(f"attribute '{key.text}' needs a string value", tok)
                self.next()
            entries.append((key.text, value))
            if self.at_punct(","):
                self.next()
                continue
            if self.at(TokenKind.ATTR_CLOSE):
                self.next()
                return AttributeSet(tuple(entries))
            raise self.error("missing '*)' to close attribute", self.peek() or opener)

    def warn_unknown(self, attrs, tok):
        for key in attrs.keys():
            if key not in KNOWN_ATTRIBUTES:
                log.warning(f"{self.path}:{tok.line}:{tok.col}: unknown attribute '{key}' ignored")

    def parse_unit(self):
        modules = []
        while self.peek() is not None:
            tok = self.peek()
            if tok.kind in (TokenKind.DIRECTIVE, TokenKind.MACRO):
                self.next()
            elif tok.kind == TokenKind.ATTR_OPEN:
                self.parse_attributes()
            elif tok.kind == TokenKind.KEYWORD and tok.text in ("module", "macromodule"):
                module = self.parse_module()
                if any(m.name == module.name for m in modules):
                    raise self.error(f"module '{module.name}' defined twice", tok)
                modules.append(module)
            elif tok.kind == TokenKind.KEYWORD and tok.text == "primitive":
                self.skip_until("endprimitive", tok)
            elif tok.kind == TokenKind.KEYWORD and tok.text == "endmodule":
                raise self.error("'endmodule' without a matching 'module'", tok)
            else:
                raise self.error(f"unexpected '{tok.text}' outside of a module", tok)
        return tuple(modules)

    def skip_until(self, keyword, opener):
        while True:
            tok = self.next()
            if tok is None:
                raise self.error(f"'{opener.text}' without '{keyword}'", opener)
            if tok.kind == TokenKind.KEYWORD and tok.text == keyword:
                return

    def parse_module(self):
        start = self.next()
        name = self.expect(TokenKind.IDENTIFIER, what="module name")
        if self.at_punct("#"):
            self.next()
            self.skip_balanced(self.expect(TokenKind.PUNCT, "(", what="'(' after '#'"))
        ports, header_uses = (), ()
        if self.at_punct("("):
            ports, header_uses = self.parse_port_list(self.next())
        self.expect(TokenKind.PUNCT, ";", what="';' after module header")
        instances, uses = self.parse_body(start, name.text)
        return ModuleDecl(name.text, ports, instances, header_uses + uses, header_uses, start.line, start.col)

    def parse_port_list(self, opener):
        ports = []
        uses = []
        current = None
        while True:
            # forwarded register ports arrive through `AUTOMATIC_self_<module>
            while self.at(TokenKind.MACRO) and self.peek().text.startswith("`" + AUTOMATIC_PREFIX):
                tok = self.next()
                uses.append(MacroUse(tok.text[1:], tok.line, tok.col))
            if self.at_punct(")"):
                self.next()
                return tuple(ports), tuple(uses)
            attrs = AttributeSet()
            attr_tok = None
            if self.at(TokenKind.ATTR_OPEN):
                attr_tok = self.peek()
                attrs = self.parse_attributes()
                self.warn_unknown(attrs, attr_tok)
            tok = self.peek()
            if tok is None:
                raise self.error("port list is missing ')'", opener)
            if tok.kind == TokenKind.KEYWORD and tok.text in DIRECTIONS:
                self.next()
                net = None
                signed = False
                msb = lsb = None
                if self.peek() is not None and self.peek().kind == TokenKind.KEYWORD and self.peek().text in NET_TYPES:
                    net = self.next().text
                if self.at(TokenKind.KEYWORD, "signed"):
                    self.next()
                    signed = True
                if self.at_punct("["):
                    msb, lsb = self.parse_range()
                current = (tok.text, net, signed, msb, lsb)
            elif tok.kind == TokenKind.IDENTIFIER:
                if current is None:
                    raise self.error(
                        f"port '{tok.text}' has no direction; non-ANSI module headers are not supported", tok)
            elif attr_tok is not None:
                raise self.error(f"malformed port declaration following attribute at '{tok.text}'", tok)
            else:
                raise self.error(f"expected port declaration, found '{tok.text}'", tok)

            name = self.peek()
            if name is None or name.kind != TokenKind.IDENTIFIER:
                what = "malformed port declaration following attribute" if attr_tok else "expected port name"
                raise self.error(f"{what}, found '{name.text if name else 'end of file'}'", name)
            self.next()
            if any(p.name == name.text for p in ports):
                raise self.error(f"duplicate port '{name.text}'", name)
            direction, net, signed, msb, lsb = current
            ports.append(PortDecl(name.text, direction, msb, lsb, signed, attrs, net, name.line, name.col))
            if self.at_punct(","):
                self.next()
            elif not self.at_punct(")") and not self.at(TokenKind.MACRO):
                raise self.error(f"expected ',' or ')' after port '{name.text}'")

    def parse_range(self):
        self.expect(TokenKind.PUNCT, "[")
        msb = self.parse_int()
        self.expect(TokenKind.PUNCT, ":", what="':' in port range")
        lsb = self.parse_int()
        self.expect(TokenKind.PUNCT, "]", what="']' closing port range")
        return msb, lsb

    def parse_int(self):
        tok = self.peek()
        if tok is None or tok.kind != TokenKind.NUMBER or not _DECIMAL.fullmatch(tok.text):
            raise self.error("port range bounds must be integer literals", tok)
        self.next()
        return int(tok.text.replace("_", ""))

    def parse_body(self, start, module_name):
        stack = []
        instances = []
        uses = []
        while True:
            tok = self.peek()
            if tok is None:
                raise self.error(f"module '{module_name}' has no matching 'endmodule'", start)
            kind, text = tok.kind, tok.text

            if kind == TokenKind.KEYWORD and text == "endmodule":
                if stack:
                    raise self.error(f"unbalanced '{stack[-1][1].text}' before 'endmodule'", stack[-1][1])
                self.next()
                return tuple(instances), tuple(uses)

            if kind == TokenKind.KEYWORD and text in ("module", "macromodule"):
                raise self.error(f"module '{module_name}' has no matching 'endmodule'", start)

            if kind == TokenKind.ATTR_OPEN:
                attrs = self.parse_attributes()
                in_expression = any(closer in _CLOSING_BRACKETS for closer, _ in stack)
                if not in_expression and self.looks_like_instantiation():
                    self.warn_unknown(attrs, tok)
                    instances.extend(self.parse_instantiation(attrs, tok, uses))
                continue

            self.next()
            if kind == TokenKind.MACRO:
                if text.startswith("`" + AUTOMATIC_PREFIX):
                    uses.append(MacroUse(text[1:], tok.line, tok.col))
            elif kind == TokenKind.KEYWORD and text in BLOCK_PAIRS:
                stack.append((BLOCK_PAIRS[text], tok))
            elif kind == TokenKind.KEYWORD and text in _CLOSERS:
                if not stack or stack[-1][0] != text:
                    raise self.error(f"unexpected '{text}'", tok)
                stack.pop()
            elif kind == TokenKind.PUNCT and text in BRACKET_PAIRS:
                stack.append((BRACKET_PAIRS[text], tok))
            elif kind == TokenKind.PUNCT and text in _CLOSING_BRACKETS:
                if not stack or stack[-1][0] != text:
                    raise self.error(f"unbalanced '{text}'", tok)
                stack.pop()

    # <module> [#(...)] <instance> ( or [
    def looks_like_instantiation(self):
        if not self.at(TokenKind.IDENTIFIER):
            return False
        i = 1
        if self.at_punct("#", i):
            if not self.at_punct("(", i + 1):
                return False
            depth = 0
            i += 1
            while True:
                tok = self.peek(i)
                if tok is None:
                    return False
                if tok.kind == TokenKind.PUNCT and tok.text == "(":
                    depth += 1
                elif tok.kind == TokenKind.PUNCT and tok.text == ")":
                    depth -= 1
                    if depth == 0:
                        break
                i += 1
            i += 1
        return self.at(TokenKind.IDENTIFIER, offset=i) and (self.at_punct("(", i + 1) or self.at_punct("[", i + 1))

    def parse_instantiation(self, attrs, attr_tok, uses):
        module = self.next()
        if self.at_punct("#"):
            self.next()
            self.skip_balanced(self.next())
        gvar, gcnt = self.replication(attrs, attr_tok)
        decls = []
        while True:
            inst = self.expect(TokenKind.IDENTIFIER, what="instance name")
            if self.at_punct("["):
                self.skip_balanced(self.next())
            opener = self.expect(TokenKind.PUNCT, "(", what=f"'(' after instance '{inst.text}'")
            has_macro = False
            depth = 1
            while depth:
                tok = self.next()
                if tok is None or (tok.kind == TokenKind.PUNCT and tok.text == ";") or \
                        (tok.kind == TokenKind.KEYWORD and tok.text == "endmodule"):
                    raise self.error(
                        f"instantiation '{inst.text}' of '{module.text}' with attribute but no closing ';'", attr_tok)
                if tok.kind == TokenKind.PUNCT and tok.text == "(":
                    depth += 1
                elif tok.kind == TokenKind.PUNCT and tok.text == ")":
                    depth -= 1
                elif tok.kind == TokenKind.MACRO and tok.text.startswith("`" + AUTOMATIC_PREFIX):
                    uses.append(MacroUse(tok.text[1:], tok.line, tok.col))
                    if tok.text == f"`{AUTOMATIC_PREFIX}{inst.text}":
                        has_macro = True
            decls.append(InstanceDecl(module.text, inst.text, attrs, has_macro, gvar, gcnt, attr_tok.line, attr_tok.col))
            if self.at_punct(","):
                self.next()
                continue
            if self.at_punct(";"):
                self.next()
                return decls
            raise self.error(
                f"instantiation '{inst.text}' of '{module.text}' with attribute but no closing ';'", attr_tok)

    def replication(self, attrs, attr_tok):
        gvar = attrs.get(ATTR_GVAR)
        gcnt = attrs.get(ATTR_GCNT)
        if (gvar is None) != (gcnt is None):
            raise self.error("attributes 'gvar' and 'gcnt' must be given together", attr_tok)
        if gvar is None:
            return None, None
        if not _GVAR.match(gvar):
            raise self.error(f"gvar '{gvar}' is not an identifier", attr_tok)
        if not _DECIMAL.fullmatch(gcnt) or int(gcnt) < 1:
            raise self.error(f"gcnt '{gcnt}' must be a positive integer", attr_tok)
        return gvar, int(gcnt)


# Parse one attribute list starting at tokens[index]; returns the set and the index past '*)'
def parse_attributes(tokens, index=0, path="<string>"):
    parser = _Parser(tokens, path)
    parser.pos = index
    attrs = parser.parse_attributes()
    return attrs, parser.pos


def parse_source(text, path="<string>"):
    parser = _Parser(tokenize(text, path), path)
    return SourceUnit(str(path), parser.parse_unit())


def read_source(path):
    with open(path, "rb") as f:
        data = f.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data[:e.start].count(b"\n") + 1
        col = e.start - (data.rfind(b"\n", 0, e.start) + 1) + 1
        raise VerilogLexError(f"source is not valid UTF-8 (byte 0x{data[e.start]:02x})", str(path), line, col)
    return parse_source(text, str(path))


# ----------------------------------------------------------------------------------
# Print-normalized form of the header subset
# ----------------------------------------------------------------------------------

def format_attributes(attrs):
    if not len(attrs):
        return "(* *)"
    parts = [key if value is None else f"{key}={_quote(value)}" for key, value in attrs]
    return "(* " + ", ".join(parts) + " *)"


def format_port(port):
    parts = [port.direction]
    if port.net:
        parts.append(port.net)
    if port.signed:
        parts.append("signed")
    if port.msb is not None:
        parts.append(f"[{port.msb}:{port.lsb}]")
    parts.append(port.name)
    return " ".join(parts)


def format_module(module):
    lines = [f"module {module.name}("]
    for i, port in enumerate(module.ports):
        if len(port.attrs):
            lines.append("    " + format_attributes(port.attrs))
        sep = "," if i < len(module.ports) - 1 else ""
        lines.append("    " + format_port(port) + sep)
    for use in module.header_uses:
        lines.append(f"    `{use.name}")
    lines.append(");")
    for inst in module.instances:
        lines.append(format_attributes(inst.attrs))
        macro = f"`{AUTOMATIC_PREFIX}{inst.instance_name}" if inst.has_automatic_macro else ""
        lines.append(f"{inst.module_name} {inst.instance_name}({macro});")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"
