import re
import logging

import pytest

from conftest import PRNG_V, STATION_V
from regmap_gen.errors import VerilogLexError, VerilogSyntaxError
from regmap_gen.vparse import (AttributeSet, TokenKind, format_module, parse_attributes, parse_source,
                               read_source, tokenize)


def kinds_and_texts(tokens):
    return [(t.kind, t.text) for t in tokens]


# Tokenizer

def test_tokenize_attribute():
    assert kinds_and_texts(tokenize("(* external *)")) == [
        (TokenKind.ATTR_OPEN, "(*"),
        (TokenKind.IDENTIFIER, "external"),
        (TokenKind.ATTR_CLOSE, "*)"),
    ]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_port_line_drops_comment():
    assert kinds_and_texts(tokenize("input [31:0] iva, // c")) == [
        (TokenKind.KEYWORD, "input"),
        (TokenKind.PUNCT, "["),
        (TokenKind.NUMBER, "31"),
        (TokenKind.PUNCT, ":"),
        (TokenKind.NUMBER, "0"),
        (TokenKind.PUNCT, "]"),
        (TokenKind.IDENTIFIER, "iva"),
        (TokenKind.PUNCT, ","),
    ]


def test_event_star_is_not_an_attribute():
    toks = tokenize("always @(*) x = y;")
    assert [t.text for t in toks[:5]] == ["always", "@", "(", "*", ")"]
    assert not any(t.kind == TokenKind.ATTR_OPEN for t in toks)


@pytest.mark.parametrize("control", ["@(* )", "@(*\t)", "@(*\n  )"])
def test_event_star_with_whitespace(control):
    toks = tokenize(f"always {control} x = y; (* keep *) reg r;")
    assert [t.text for t in toks[:5]] == ["always", "@", "(", "*", ")"]
    assert [t.kind for t in toks if t.kind in (TokenKind.ATTR_OPEN, TokenKind.ATTR_CLOSE)] == [
        TokenKind.ATTR_OPEN, TokenKind.ATTR_CLOSE]


def test_event_star_with_whitespace_in_module():
    text = """
module m(input clk, input a);
always @(* ) y = a;
(* lb_automatic *) sub u(.a(a) `AUTOMATIC_u);
endmodule
"""
    m = parse_source(text).module("m")
    assert [i.instance_name for i in m.instances] == ["u"]


def test_positions_reslice_source():
    text = "module m(\n  /* block\n comment */ input a,\r\n\toutput [3:0] b);\nendmodule\n"
    lines = text.replace("\r\n", "\n").split("\n")
    for tok in tokenize(text):
        line = lines[tok.line - 1]
        assert line[tok.col - 1:tok.col - 1 + len(tok.text)] == tok.text


def test_macros_and_directives():
    toks = tokenize('`include "x.vh"\n`define W 8 \\\n  + 1\n`ifdef SIM\n`endif\nfoo `AUTOMATIC_prng `W')
    assert kinds_and_texts(toks) == [
        (TokenKind.DIRECTIVE, '`include "x.vh"'),
        (TokenKind.DIRECTIVE, "`define W 8 \\\n  + 1"),
        (TokenKind.DIRECTIVE, "`ifdef SIM"),
        (TokenKind.DIRECTIVE, "`endif"),
        (TokenKind.IDENTIFIER, "foo"),
        (TokenKind.MACRO, "`AUTOMATIC_prng"),
        (TokenKind.MACRO, "`W"),
    ]


def test_sized_numbers_are_single_tokens():
    toks = tokenize("x = 32'h1 + 4'b10_01 + 'd3;")
    assert [t.text for t in toks if t.kind == TokenKind.NUMBER] == ["32'h1", "4'b10_01", "'d3"]


@pytest.mark.parametrize("text, line, col", [
    ('module m;\n  x = "abc\nendmodule', 2, 7),
    ("module m;\n/* never closed", 2, 1),
])
def test_lex_errors_carry_position(text, line, col):
    with pytest.raises(VerilogLexError) as err:
        tokenize(text, "bad.v")
    assert (err.value.line, err.value.col) == (line, col)
    assert str(err.value).startswith(f"bad.v:{line}:{col}: ")


# Attributes

def test_parse_attributes_bare():
    attrs, index = parse_attributes(tokenize("(* external *) input a"))
    assert attrs.entries == (("external", None),)
    assert index == 3


def test_parse_attributes_with_value():
    attrs, _ = parse_attributes(tokenize('(* external, signal_type="plus-we" *)'))
    assert attrs.entries == (("external", None), ("signal_type", "plus-we"))
    assert attrs.get("signal_type") == "plus-we"
    assert "external" in attrs and attrs.get("external") is None


def test_parse_attributes_empty():
    attrs, _ = parse_attributes(tokenize("(* *)"))
    assert attrs == AttributeSet()
    assert len(attrs) == 0


def test_parse_attributes_integer_value():
    attrs, _ = parse_attributes(tokenize('(* lb_automatic, gvar="i", gcnt=4 *)'))
    assert attrs.get("gcnt") == "4"


@pytest.mark.parametrize("text, message", [
    ("(* external", re.escape("missing '*)'")),
    ("(* external, external *)", "duplicate attribute 'external'"),
    ("(* signal_type=plus *)", "needs a string value"),
])
def test_parse_attributes_errors(text, message):
    with pytest.raises(VerilogSyntaxError, match=message):
        parse_attributes(tokenize(text))


# Modules

def test_prng_listing():
    unit = parse_source(PRNG_V, "prng.v")
    assert [m.name for m in unit.modules] == ["prng"]
    ports = {p.name: p for p in unit.module("prng").ports}
    assert [(p.name, p.direction, p.width) for p in unit.module("prng").ports] == [
        ("clk", "input", 1),
        ("rnda", "output", 32),
        ("rndb", "output", 32),
        ("run", "input", 1),
        ("iva", "input", 32),
        ("iva_we", "input", 1),
    ]
    assert ports["run"].attrs.entries == (("external", None),)
    assert ports["iva"].attrs.entries == (("external", None), ("signal_type", "plus-we"))
    assert len(ports["iva_we"].attrs) == 0
    assert unit.module("prng").instances == ()


def test_degenerate_module():
    unit = parse_source("module m(); endmodule")
    m = unit.module("m")
    assert m.ports == () and m.instances == ()


def test_station_instance_and_macro_uses():
    station = parse_source(STATION_V, "station.v").module("station")
    assert len(station.instances) == 1
    inst = station.instances[0]
    assert (inst.module_name, inst.instance_name) == ("prng", "prng")
    assert inst.attrs.entries == (("lb_automatic", None),)
    assert inst.has_automatic_macro and inst.is_automatic
    assert (inst.gvar, inst.gcnt) == (None, None)
    assert [u.name for u in station.automatic_uses] == ["AUTOMATIC_decode", "AUTOMATIC_prng"]


def test_replicated_instance():
    text = """
module top(input clk);
genvar i;
generate for (i=0; i<4; i=i+1) begin: g
    (* lb_automatic, gvar="i", gcnt=4 *)
    ch ch(.clk(clk) `AUTOMATIC_ch);
end endgenerate
endmodule
"""
    inst = parse_source(text).module("top").instances[0]
    assert (inst.gvar, inst.gcnt) == ("i", 4)


def test_port_list_macro_uses():
    text = """
module mid(input clk `AUTOMATIC_self_mid);
(* lb_automatic *) leaf b(.clk(clk) `AUTOMATIC_b);
endmodule
"""
    m = parse_source(text).module("mid")
    assert [p.name for p in m.ports] == ["clk"]
    assert [u.name for u in m.header_uses] == ["AUTOMATIC_self_mid"]
    assert [u.name for u in m.body_uses] == ["AUTOMATIC_b"]
    assert [u.name for u in m.automatic_uses] == ["AUTOMATIC_self_mid", "AUTOMATIC_b"]
    assert (m.header_uses[0].line, m.header_uses[0].col) == (2, 22)


def test_port_list_macro_only():
    m = parse_source("module mid(`AUTOMATIC_self_mid); endmodule").module("mid")
    assert m.ports == ()
    assert [u.name for u in m.header_uses] == ["AUTOMATIC_self_mid"]


def test_read_source_rejects_bad_utf8(tmp_path):
    path = tmp_path / "bad.v"
    path.write_bytes(b"module m(input a);\n  wire \xff x;\nendmodule\n")
    with pytest.raises(VerilogLexError) as err:
        read_source(path)
    assert (err.value.line, err.value.col) == (2, 8)
    assert "not valid UTF-8" in str(err.value)
    assert str(err.value).startswith(f"{path}:2:8: ")


def test_read_source_utf8_description(tmp_path):
    path = tmp_path / "ok.v"
    path.write_text('module m((* external, description="gain in µV" *) input [3:0] g); endmodule\n',
                    encoding="utf-8")
    port = read_source(path).module("m").ports[0]
    assert port.attrs.get("description") == "gain in µV"


def test_signed_and_net_types():
    m = parse_source("module m(input wire signed [17:0] a, output reg [0:7] b); endmodule").module("m")
    a, b = m.ports
    assert a.signed and a.net == "wire" and a.width == 18
    assert not b.signed and b.width == 8


def test_direction_is_inherited():
    m = parse_source("module m(input [3:0] a, b, output c); endmodule").module("m")
    assert [(p.name, p.direction, p.width) for p in m.ports] == [("a", "input", 4), ("b", "input", 4),
                                                                  ("c", "output", 1)]


def test_attributes_elsewhere_are_ignored():
    text = """
module m(input clk);
(* keep *) reg [3:0] r;
always @(posedge clk) r <= (* mark *) r + 1;
(* full_case *) case (r) 0: r <= 1; default: r <= 0; endcase
endmodule
"""
    assert parse_source(text).module("m").instances == ()


def test_unknown_attribute_warns(caplog):
    caplog.set_level(logging.WARNING, logger="regmap_gen")
    parse_source('module m((* external, colour="red" *) input a); endmodule', "w.v")
    assert any("unknown attribute 'colour'" in r.getMessage() for r in caplog.records)


def test_parameters_and_primitives_are_skipped():
    text = """
primitive udp(o, a); output o; input a; table 0:1; 1:0; endtable endprimitive
module m #(parameter W = 8, parameter [3:0] N = 2) (input [7:0] a);
    (* lb_automatic *) sub #(.W(W)) u_sub (.a(a) `AUTOMATIC_u_sub);
endmodule
"""
    m = parse_source(text).module("m")
    assert [p.name for p in m.ports] == ["a"]
    assert m.instances[0].module_name == "sub" and m.instances[0].has_automatic_macro


@pytest.mark.parametrize("text, message", [
    ("module m(input a);\nalways begin\nendmodule", "unbalanced 'begin'"),
    ("module m(input a);\n", "no matching 'endmodule'"),
    ("endmodule", "without a matching 'module'"),
    ("module m((* external *) 5); endmodule", "malformed port declaration following attribute"),
    ("module m(input a);\n(* lb_automatic *) sub u(.a(a))\nendmodule", "no closing ';'"),
    ("module m(a, b); input a; endmodule", "non-ANSI"),
    ("module m(input a, input a); endmodule", "duplicate port 'a'"),
    ("module m(input [W-1:0] a); endmodule", "integer literals"),
    ("module m(); endmodule\nmodule m(); endmodule", "defined twice"),
    ('module m(input a);\n(* lb_automatic, gvar="i" *) sub u(.a(a));\nendmodule', "given together"),
])
def test_parse_errors(text, message):
    with pytest.raises(VerilogSyntaxError, match=message):
        parse_source(text, "e.v")


def test_parse_error_positions_lie_in_file():
    text = "module m(input a);\n(* lb_automatic *) sub u(.a(a))\nendmodule"
    with pytest.raises(VerilogSyntaxError) as err:
        parse_source(text, "e.v")
    assert err.value.path == "e.v"
    assert (err.value.line, err.value.col) == (2, 1)
    lines = text.split("\n")
    assert 1 <= err.value.line <= len(lines)


def test_format_module_is_idempotent():
    sources = [PRNG_V, STATION_V, 'module r(input [3:0] a, (* external, aw="3", description="a \\"q\\"" *)'
                                  ' output signed [15:0] b); (* lb_automatic, gvar="k", gcnt=2 *) c c(); endmodule',
               "module mid(input clk `AUTOMATIC_self_mid); endmodule"]
    for text in sources:
        for module in parse_source(text).modules:
            again = parse_source(format_module(module)).module(module.name)
            assert again.ports == module.ports
            assert again.instances == module.instances
            assert again.header_uses == module.header_uses
