import os

import pytest

from conftest import PRNG_V, STATION_V
from regmap_gen.cli import EXIT_INPUT, EXIT_OK, EXIT_USAGE, RunConfig, main, print_map, run, write_outputs
from regmap_gen.errors import UsageError

OUTPUTS = ["addr_map_station.vh", "regmap_station.json", "regmap_station.md", "station_auto.vh"]


@pytest.fixture
def station_copy(write_design, tmp_path):
    write_design({"src/station.v": STATION_V, "src/prng.v": PRNG_V})
    return tmp_path / "src" / "station.v"


def test_station_end_to_end(station_top, tmp_path, golden_dir):
    out = tmp_path / "out"
    assert main(["-t", str(station_top), "-d", str(station_top.parent), "-o", str(out)]) == EXIT_OK
    assert sorted(os.listdir(out)) == OUTPUTS
    for name in ("station_auto.vh", "addr_map_station.vh", "regmap_station.json"):
        assert (out / name).read_text() == (golden_dir / name).read_text()


def test_runs_are_byte_identical(station_top, tmp_path):
    for name in ("a", "b"):
        assert main(["-t", str(station_top), "-o", str(tmp_path / name)]) == EXIT_OK
    for name in OUTPUTS:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_default_output_directory_is_cwd(station_top, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["-t", str(station_top)]) == EXIT_OK
    assert sorted(os.listdir(tmp_path)) == OUTPUTS


def test_missing_top_is_usage_error(tmp_path, capsys):
    missing = tmp_path / "nope.v"
    assert main(["-t", str(missing), "-o", str(tmp_path / "out")]) == EXIT_USAGE
    assert str(missing) in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("argv", [
    [],
    ["-t", "x.v", "--lb-hi", "ten"],
    ["-t", "x.v", "--log-level", "LOUD"],
])
def test_bad_arguments(argv):
    assert main(argv) == EXIT_USAGE


@pytest.mark.parametrize("extra", [["--lb-hi", "3"], ["--lb-hi", "31"], ["--base", "0x8000"]])
def test_bus_limits(station_top, tmp_path, extra, capsys):
    assert main(["-t", str(station_top), "-o", str(tmp_path)] + extra) == EXIT_USAGE
    assert "must be in" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "--no-decoder" in capsys.readouterr().out


def test_collision_fixture_leaves_output_untouched(write_design, tmp_path, capsys):
    root = write_design({
        "top.v": "module top(input clk);\n"
                 "(* lb_automatic *) a a(.clk(clk) `AUTOMATIC_a);\n"
                 "(* lb_automatic *) x a_b(.clk(clk) `AUTOMATIC_a_b);\n"
                 "endmodule\n",
        "a.v":   "module a(input clk);\n(* lb_automatic *) x b(.clk(clk) `AUTOMATIC_b);\nendmodule\n",
        "x.v":   "module x(input clk, (* external *) input [3:0] v);\nendmodule\n",
        "out/keep.txt": "untouched",
    })
    assert main(["-t", str(root / "top.v"), "-o", str(root / "out")]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "top.a.b" in err and "top.a_b" in err
    assert os.listdir(root / "out") == ["keep.txt"]


def test_print_only(station_top, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["-t", str(station_top), "--print"]) == EXIT_OK
    out = capsys.readouterr().out
    rows = [line for line in out.splitlines() if "prng_" in line]
    assert len(rows) == 2
    assert "prng_iva" in rows[0] and "prng_run" in rows[1]
    assert os.listdir(tmp_path) == []


def test_print_and_write(station_top, tmp_path, capsys):
    assert main(["-t", str(station_top), "--print", "-o", str(tmp_path / "out")]) == EXIT_OK
    assert "prng_iva" in capsys.readouterr().out
    assert sorted(os.listdir(tmp_path / "out")) == OUTPUTS


def test_print_empty_design(write_design, capsys):
    root = write_design({"top.v": "module top(input clk);\nendmodule\n"})
    config = RunConfig(top=str(root / "top.v"))
    assert print_map(config) == EXIT_OK
    out = capsys.readouterr().out
    assert "Name" in out and "Clock domain" in out
    assert "0 registers" in out


def test_no_decoder(station_copy, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["-t", str(station_copy), "-o", str(out), "--no-decoder"]) == EXIT_OK
    assert "AUTOMATIC_decode" not in (out / "station_auto.vh").read_text()
    assert "`AUTOMATIC_decode matches no generated macro" in capsys.readouterr().err


def test_base_offset_moves_map(station_top, tmp_path):
    assert main(["-t", str(station_top), "-o", str(tmp_path), "--base", "0x100", "--lb-hi", "10"]) == EXIT_OK
    text = (tmp_path / "addr_map_station.vh").read_text()
    assert text.startswith("`define LB_HI 10\n")
    assert "`define HIT_prng_iva (lb_addr[`LB_HI:0]==256)" in text


@pytest.mark.parametrize("files, needle", [
    ({"top.v": "module top(input clk);\n(* lb_automatic *) ghost g(.clk(clk));\nendmodule\n"}, "'ghost'"),
    ({"top.v": "module top(input clk);\n(* lb_automatic *) sub u(.clk(clk));\nendmodule\n",
      "sub.v": "module sub((* external *) input [3:0] x, input [1:0] x_we);\nendmodule\n"}, "x_we"),
    ({"top.v": "module top(input clk;\nendmodule\n"}, "top.v:1:"),
    ({"top.v": "module top(input clk);\n(* lb_automatic *) sub u(.clk(clk));\nendmodule\n",
      "sub.v": 'module sub(input clk, (* external, aw="²" *) input [3:0] x);\nendmodule\n'}, "aw='²'"),
    ({"top.v": "module top(input clk);\n(* lb_automatic *) sub u(.clk(clk));\nendmodule\n",
      "sub.v": 'module sub((* external, signal_type="plus-we" *) output [3:0] st);\nendmodule\n'},
     "cannot have signal_type 'plus-we'"),
    ({"top.v": "module top(input clk);\n(* lb_automatic *) sub u(.clk(clk));\nendmodule\n",
      "sub.v": "module sub((* external *) output [3:0] st, input st_we);\nendmodule\n"},
     "cannot have a write strobe 'st_we'"),
])
def test_input_errors_exit_one(write_design, tmp_path, capsys, files, needle):
    root = write_design(files)
    out = tmp_path / "out"
    assert main(["-t", str(root / "top.v"), "-o", str(out)]) == EXIT_INPUT
    assert needle in capsys.readouterr().err
    assert not out.exists()


def test_non_utf8_source_exits_one(write_design, tmp_path, capsys):
    root = write_design({"top.v": "module top(input clk);\n(* lb_automatic *) sub u(.clk(clk));\nendmodule\n"})
    (root / "sub.v").write_bytes(b"module sub(input clk);\n// gain \xb5V\nendmodule\n")
    out = tmp_path / "out"
    assert main(["-t", str(root / "top.v"), "-o", str(out)]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert f"{root / 'sub.v'}:2:9: source is not valid UTF-8" in err
    assert "Traceback" not in err
    assert not out.exists()


def test_verbose_logs_phases(station_top, tmp_path, capsys):
    assert main(["-t", str(station_top), "-o", str(tmp_path), "-v"]) == EXIT_OK
    err = capsys.readouterr().err
    assert "INFO: Collected 2 registers" in err
    assert "Address map verified" in err


def test_run_config_validation(station_top, tmp_path):
    with pytest.raises(UsageError, match="search directory not found"):
        RunConfig(top=str(station_top), search_dirs=[str(tmp_path / "missing")])
    with pytest.raises(UsageError, match="--base"):
        RunConfig(top=str(station_top), lb_hi=4, base_offset=32)
    config = RunConfig(top=str(station_top), out_dir=str(tmp_path))
    assert config.bus.space == 32768
    assert run(config) == EXIT_OK


def test_write_outputs_leaves_no_temporaries(tmp_path):
    written = write_outputs({"a.txt": "1\n", "b.txt": "2\n"}, str(tmp_path / "out"))
    assert [os.path.basename(p) for p in written] == ["a.txt", "b.txt"]
    assert sorted(os.listdir(tmp_path / "out")) == ["a.txt", "b.txt"]
