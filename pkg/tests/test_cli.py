"""
Tests for the command-line interface
"""

import os
import subprocess
import sys

import pytest

from dicing.engine import KeystreamGenerator
from main import EXIT_IO, EXIT_OK, EXIT_SELFTEST, EXIT_USAGE, CliConfig, run, tables_digest

KEY = bytes(range(16)).hex()
IV = "a5" * 32


def keystream_bytes(n, key=KEY, iv=IV, mode="standard"):
    iv_bytes = bytes.fromhex(iv).ljust(32, b"\x00")
    return KeystreamGenerator.from_key_iv(bytes.fromhex(key), iv_bytes, mode).keystream(n)


class TestCliConfig:
    def test_iv_padding(self):
        cfg = CliConfig(key=KEY, iv="0102")
        assert cfg.iv_bytes == b"\x01\x02" + bytes(30)

    def test_default_format(self):
        assert CliConfig(key=KEY, iv=IV).output_format == "hex"
        assert CliConfig(key=KEY, iv=IV, output="x").output_format == "raw"
        assert CliConfig(key=KEY, iv=IV, output="x", format="hex").output_format == "hex"

    def test_key_normalized(self):
        assert CliConfig(key=KEY.upper(), iv=IV).key == KEY


class TestKeystreamCommand:
    def test_hex_on_stdout(self, capsys):
        assert run(["keystream", "--key", KEY, "--iv", IV, "--len", "40"]) == EXIT_OK
        out = capsys.readouterr().out.strip()
        assert bytes.fromhex(out) == keystream_bytes(40)

    def test_zero_length(self, capsys):
        assert run(["keystream", "--key", KEY, "--iv", IV, "--len", "0"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == ""

    def test_raw_on_stdout(self, capsysbinary):
        assert run(["keystream", "--key", KEY, "--iv", IV, "--len", "20", "--raw"]) == EXIT_OK
        assert capsysbinary.readouterr().out == keystream_bytes(20)

    def test_raw_file_by_default(self, tmp_path):
        out = tmp_path / "ks.bin"
        args = ["keystream", "--key", KEY, "--iv", IV, "--len", "33", "--out", str(out)]
        assert run(args) == EXIT_OK
        assert out.read_bytes() == keystream_bytes(33)

    def test_hex_file(self, tmp_path):
        out = tmp_path / "ks.hex"
        args = ["keystream", "--key", KEY, "--iv", IV, "--len", "8", "--out", str(out), "--hex"]
        assert run(args) == EXIT_OK
        assert out.read_text() == keystream_bytes(8).hex()

    def test_short_iv_is_zero_padded(self, capsys):
        run(["keystream", "--key", KEY, "--iv", "01", "--len", "16"])
        expected = keystream_bytes(16, iv="01" + "00" * 31)
        assert bytes.fromhex(capsys.readouterr().out.strip()) == expected

    def test_mode_selects_variant(self, capsys):
        run(["keystream", "--key", KEY, "--iv", IV, "--len", "16", "--mode", "r3"])
        out = bytes.fromhex(capsys.readouterr().out.strip())
        assert out == keystream_bytes(16, mode="r3")
        assert out != keystream_bytes(16)

    def test_long_key(self, capsys):
        key = bytes(range(32)).hex()
        run(["keystream", "--key", key, "--iv", IV, "--len", "16"])
        assert bytes.fromhex(capsys.readouterr().out.strip()) == keystream_bytes(16, key=key)


class TestUsageErrors:
    @pytest.mark.parametrize(
        "key", ["00" * 15, "00" * 24, "zz" * 16, "0" * 31]
    )
    def test_bad_key(self, key, capsys):
        assert run(["keystream", "--key", key, "--iv", IV, "--len", "4"]) == EXIT_USAGE
        assert "error" in capsys.readouterr().err

    def test_unsupported_key_size_message(self, capsys):
        run(["keystream", "--key", "00" * 24, "--iv", IV, "--len", "4"])
        assert "unsupported key size" in capsys.readouterr().err

    def test_long_iv(self):
        assert run(["keystream", "--key", KEY, "--iv", "00" * 33, "--len", "4"]) == EXIT_USAGE

    def test_negative_length(self):
        assert run(["keystream", "--key", KEY, "--iv", IV, "--len", "-1"]) == EXIT_USAGE

    def test_missing_iv_exits_one(self):
        with pytest.raises(SystemExit) as excinfo:
            run(["keystream", "--key", KEY, "--len", "4"])
        assert excinfo.value.code == EXIT_USAGE

    def test_unknown_mode_exits_one(self):
        with pytest.raises(SystemExit) as excinfo:
            run(["keystream", "--key", KEY, "--iv", IV, "--len", "4", "--mode", "r9"])
        assert excinfo.value.code == EXIT_USAGE

    def test_no_command(self, capsys):
        assert run([]) == EXIT_USAGE

    def test_bench_nonpositive(self):
        assert run(["bench", "--mb", "0"]) == EXIT_USAGE


def crypt(command, source, destination):
    return run(
        [command, "--key", KEY, "--iv", IV, "--in", str(source), "--out", str(destination)]
    )


class TestFileCommands:
    @pytest.mark.parametrize("size", [0, 1, 15, 16, 17, 1000])
    def test_roundtrip(self, tmp_path, rng, size):
        plain = rng.randbytes(size)
        (tmp_path / "p").write_bytes(plain)
        assert crypt("encrypt", tmp_path / "p", tmp_path / "c") == EXIT_OK
        assert crypt("decrypt", tmp_path / "c", tmp_path / "d") == EXIT_OK
        assert (tmp_path / "d").read_bytes() == plain
        if size:
            assert (tmp_path / "c").read_bytes() != plain

    def test_zero_file_encrypts_to_keystream(self, tmp_path):
        (tmp_path / "z").write_bytes(bytes(50))
        crypt("encrypt", tmp_path / "z", tmp_path / "c")
        assert (tmp_path / "c").read_bytes() == keystream_bytes(50)

    def test_missing_input_is_io_error(self, tmp_path, capsys):
        assert crypt("encrypt", tmp_path / "nope", tmp_path / "c") == EXIT_IO
        assert "I/O error" in capsys.readouterr().err
        assert not (tmp_path / "c").exists()

    def test_unwritable_output_is_io_error(self, tmp_path):
        (tmp_path / "p").write_bytes(b"data")
        assert crypt("encrypt", tmp_path / "p", tmp_path / "no_such_dir" / "c") == EXIT_IO


class TestReportCommands:
    def test_constants(self, capsys):
        assert run(["constants"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "floor(e * 57!)" in out
        assert tables_digest() in out

    def test_tables_digest_stable(self):
        assert tables_digest() == tables_digest()
        assert len(tables_digest()) == 64

    def test_selftest_failure_exit_code(self, mocker, capsys):
        from verification import CheckResult, SelftestReport

        mocker.patch(
            "verification.run_selftest",
            return_value=SelftestReport([CheckResult("sbox_permutation", False, "broken")]),
        )
        assert run(["selftest"]) == EXIT_SELFTEST
        assert "sbox_permutation" in capsys.readouterr().out

    def test_selftest_success_exit_code(self, mocker, capsys):
        from verification import CheckResult, SelftestReport

        mocker.patch(
            "verification.run_selftest",
            return_value=SelftestReport([CheckResult("constant_c", True)]),
        )
        assert run(["selftest", "--preset", "quick"]) == EXIT_OK

    def test_bench(self, mocker, capsys):
        from config import create_custom_config

        mocker.patch(
            "main.get_config",
            return_value=create_custom_config(bench_repetitions=1, bench_setup_iterations=1),
        )
        assert run(["bench", "--mb", "0.005"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "Keysetup" in out and "IVsetup" in out


@pytest.mark.integration
class TestSubprocess:
    def test_deterministic_across_processes(self):
        root = os.path.join(os.path.dirname(__file__), "..")
        cmd = [sys.executable, "main.py", "keystream", "--key", KEY, "--iv", IV, "--len", "64"]
        first = subprocess.run(cmd, cwd=root, capture_output=True, text=True, check=True)
        second = subprocess.run(cmd, cwd=root, capture_output=True, text=True, check=True)
        assert first.stdout == second.stdout
        assert bytes.fromhex(first.stdout.strip()) == keystream_bytes(64)

    def test_usage_exit_status(self):
        root = os.path.join(os.path.dirname(__file__), "..")
        cmd = [sys.executable, "main.py", "keystream", "--key", "00", "--iv", IV, "--len", "4"]
        assert subprocess.run(cmd, cwd=root, capture_output=True).returncode == EXIT_USAGE
