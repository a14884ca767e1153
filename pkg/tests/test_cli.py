import json
from pathlib import Path

import pytest

from sealbid.cli import main
from sealbid.ledger import Ledger, write_trace_csv
from conftest import addr, eth

ROOT = Path(__file__).resolve().parent.parent
CONFIG = ROOT / "scenarios" / "three_bidders.json"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_is_deterministic(capsys, tmp_path):
    code, first, _ = run(capsys, "run", "--config", str(CONFIG), "--out", str(tmp_path / "a"))
    assert code == 0
    _, second, _ = run(capsys, "run", "--config", str(CONFIG), "--out", str(tmp_path / "b"))
    assert first == second
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
    assert json.loads(first)["winner"]["price_wei"] == str(5 * 10**17)


def test_run_seed_and_market_override(capsys):
    _, out, _ = run(capsys, "run", "--config", str(CONFIG), "--seed", "3", "--gas-price", "90")
    report = json.loads(out)
    assert report["seed"] == 3 and report["market"]["gas_price_gwei"] == "90"


def test_run_missing_config(capsys, tmp_path):
    code, _, err = run(capsys, "run", "--config", str(tmp_path / "nope.json"))
    assert code == 1 and "error" in err


def test_run_bad_config(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"bidders": [{"price_eth": "-1"}]}))
    code, _, err = run(capsys, "run", "--config", str(p))
    assert code == 1 and "bidders[0].price_eth" in err


def test_fees(capsys):
    code, out, _ = run(capsys, "fees", "--gas-price", "45", "--eth-usd", "3200")
    assert code == 0
    for cell in ("3.02", "9.92", "7.60", "17.65", "23.98", "5.80", "15.97", "11.97", "10.24", "38.19"):
        assert cell in out


def test_fees_other_market(capsys):
    _, out, _ = run(capsys, "fees", "--gas-price", "90")
    assert "6.05" in out  # 21000 gas at 90 gwei


def test_usage_errors_exit_2(capsys):
    for argv in ([], ["bogus"], ["fees", "--gas-price", "abc"], ["analyze", "--trace", "t.csv"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2
    capsys.readouterr()


def _trace(path):
    ledger = Ledger()
    ledger.fund_genesis(addr(1), eth(10))
    ledger.transfer(addr(1), addr(2), 1)
    ledger.advance_to(150)
    ledger.transfer(addr(1), addr(3), eth("0.3"))
    ledger.transfer(addr(1), addr(4), eth(7))
    write_trace_csv(ledger.trace, path)


def test_analyze(capsys, tmp_path):
    _trace(tmp_path / "t.csv.gz")
    code, out, err = run(capsys, "analyze", "--trace", str(tmp_path / "t.csv.gz"), "--from", "100", "--to", "200",
                         "--out", str(tmp_path / "o"))
    assert code == 0 and err == ""
    lines = out.splitlines()
    assert lines[0] == "range_lo_eth,range_hi_eth,count"
    assert "0.1,0.5,1" in lines and "1,10,1" in lines
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["max_balance_bound_wei"] == str(eth(7))


def test_analyze_warns_without_history(capsys, tmp_path):
    _trace(tmp_path / "t.csv")
    code, _, err = run(capsys, "analyze", "--trace", str(tmp_path / "t.csv"), "--from", "0", "--to", "200")
    assert code == 0 and "warning" in err


def test_analyze_domain_errors(capsys, tmp_path):
    _trace(tmp_path / "t.csv")
    code, _, _ = run(capsys, "analyze", "--trace", str(tmp_path / "t.csv"), "--from", "9", "--to", "1")
    assert code == 1
    code, _, _ = run(capsys, "analyze", "--trace", str(tmp_path / "t.csv"), "--from", "1", "--to", "9",
                     "--geometric", "--ratio", "1")
    assert code == 1


def test_analyze_geometric(capsys, tmp_path):
    _trace(tmp_path / "t.csv")
    _, out, _ = run(capsys, "analyze", "--trace", str(tmp_path / "t.csv"), "--from", "100", "--to", "200",
                    "--geometric", "--lo", "0.1", "--hi", "1")
    assert out.splitlines()[1] == "0.1,0.125,0"


def test_derive_address_stable(capsys):
    argv = ["derive-address", "--deployer", "0x" + "11" * 20, "--auction-id", "1",
            "--bidder", "0x" + "22" * 20, "--random", "0x" + "33" * 32]
    code, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert code == 0 and first == second and first.startswith("0x") and len(first.strip()) == 42


def test_derive_address_raw_salt(capsys):
    # the zero golden vector: deployer 0, salt 0, empty init code
    empty = "0xc5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
    _, out, _ = run(capsys, "derive-address", "--deployer", "0x" + "00" * 20, "--salt32", "0x" + "00" * 32,
                    "--bytecode-hash", empty)
    assert out.strip() == "0xe33c0c7f7df4809055c3eba6c09cfe4baf1bd9e0"


def test_derive_address_needs_salt(capsys):
    with pytest.raises(SystemExit) as info:
        main(["derive-address", "--deployer", "0x" + "11" * 20])
    assert info.value.code == 2
