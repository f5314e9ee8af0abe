import json
import os
import subprocess
import sys

import pytest

from mezzo_core.cli import main
from mezzo_core.permcheck import Diagnostic
from mezzo_core.permcheck.diagnostics import from_json, to_json
from support import ACCEPTED, REJECTED, ROOT

CORPUS_FILES = ACCEPTED + REJECTED


def rel(path):
    return str(path.relative_to(ROOT))


@pytest.fixture(autouse=True)
def at_root(monkeypatch):
    monkeypatch.chdir(ROOT)
    monkeypatch.setenv("NO_COLOR", "1")


def expected_exit(path):
    if path.parent.name == "accepted":
        return 0
    return 2 if path.name == "parse_error.mz" else 1


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.name)
def test_check_exit_codes(path, capsys):
    assert main(["check", rel(path)]) == expected_exit(path)


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.name)
def test_golden_diagnostics(path, capsys):
    main(["check", "--format", "json", rel(path)])
    got = from_json(capsys.readouterr().out)
    want = from_json(path.with_suffix(".expected").read_text())
    assert got == want


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.name)
def test_json_round_trip(path):
    for d in from_json(path.with_suffix(".expected").read_text()):
        assert Diagnostic.from_dict(json.loads(json.dumps(d.to_dict()))) == d
        assert from_json(to_json([d])) == [d]


def test_missing_assign_human_output(capsys):
    assert main(["check", "corpus/rejected/bst_missing_assign.mz"]) == 1
    out = capsys.readouterr().out
    first = out.splitlines()[0]
    assert first.startswith("corpus/rejected/bst_missing_assign.mz:29:19: error[E-RETURN]: ")
    assert out.count("error[") == 1 and "l @ mtree a" in first
    assert "\x1b[" not in out


def test_dump_perms(capsys):
    assert main(["check", "--dump-perms", "corpus/accepted/bst.mz:29",
                 "corpus/accepted/bst.mz"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("corpus/accepted/bst.mz:29: ")
    assert "left_leq @ mtree a * left_gt @ mtree a" in out


def test_dump_perms_json(capsys):
    main(["check", "--format", "json", "--dump-perms", "corpus/accepted/annotate.mz:22",
          "corpus/accepted/annotate.mz"])
    data = json.loads(capsys.readouterr().out)
    (dump,) = data["dumps"]
    assert dump["line"] == 22 and "t @ mtree (string, int)" in dump["env"]


def test_dump_on_a_line_without_code(capsys):
    main(["check", "--dump-perms", "corpus/accepted/bst.mz:32", "corpus/accepted/bst.mz"])
    assert "no expression starts on this line" in capsys.readouterr().out


def test_bad_dump_target(capsys):
    with pytest.raises(SystemExit) as info:
        main(["check", "--dump-perms", "bst.mz", "corpus/accepted/bst.mz"])
    assert info.value.code == 2


def test_several_files_keep_input_order(capsys):
    files = [rel(p) for p in REJECTED if p.name != "parse_error.mz"]
    assert main(["check", "-j", "3", *files]) == 1
    out = capsys.readouterr().out
    heads = [ln.split(":")[0] for ln in out.splitlines() if not ln.startswith(" ")]
    assert heads == files


def test_parse_error_wins_over_check_errors(capsys):
    assert main(["check", "corpus/rejected/alias_return.mz",
                 "corpus/rejected/parse_error.mz"]) == 2


def test_missing_file(capsys):
    assert main(["check", "missing.mz"]) == 2
    assert "missing.mz" in capsys.readouterr().err
    assert main(["run", "missing.mz"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_run_pair(capsys):
    assert main(["run", "corpus/accepted/pair.mz"]) == 0
    assert capsys.readouterr().out.strip() == '(1, "hello")'


def test_run_refuses_rejected_programs(capsys):
    assert main(["run", "corpus/rejected/immut_write.mz"]) == 1
    assert "E-IMMUT-WRITE" in capsys.readouterr().err


def test_run_unchecked_fault(capsys):
    assert main(["run", "--unchecked", "corpus/rejected/immut_write.mz"]) == 3
    err = capsys.readouterr().err
    assert "runtime fault [immutable-write]" in err


def test_run_unchecked_alias_return_shows_sharing(capsys):
    assert main(["run", "--unchecked", "corpus/rejected/alias_return.mz"]) == 0
    out = capsys.readouterr().out.strip()
    # the node holding 6 is reachable from both results
    left, right = out[1:-1].split(", Node", 1)
    assert "value = 6" in left and "value = 6" in right


def test_run_entry(capsys, tmp_path):
    src = tmp_path / "two.mz"
    src.write_text("val main (): int = 1\nval other (): int = 2\n")
    assert main(["run", "--entry", "other", str(src)]) == 0
    assert capsys.readouterr().out.strip() == "2"


def test_module_entry_point():
    env = dict(os.environ, NO_COLOR="1")
    proc = subprocess.run([sys.executable, "-m", "mezzo_core", "check",
                           "corpus/accepted/bst.mz"], cwd=ROOT, env=env,
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == ""


def test_color_only_on_terminals(monkeypatch):
    from mezzo_core.cli import _use_color

    class Tty:
        def isatty(self):
            return True

    assert not _use_color(Tty())  # NO_COLOR is set by the fixture
    monkeypatch.delenv("NO_COLOR")
    assert _use_color(Tty())
    assert not _use_color(sys.stdout)
