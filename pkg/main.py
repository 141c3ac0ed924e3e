#!/usr/bin/env python3
"""
Command-line entry point: keystream, encrypt/decrypt, selftest, bench, constants
"""

import argparse
import hashlib
import sys
from typing import List, NoReturn, Optional

from pydantic import BaseModel, ValidationError, field_validator
from rich.console import Console
from rich.table import Table

from config import get_config
from dicing.engine import KeystreamGenerator, VariantMode
from dicing.exceptions import DicingError
from dicing.gf2x import (
    CIPHER_FIELDS,
    FIELD_K,
    POLYNOMIAL_FORMS,
    expand_polynomial,
    exponents,
    multiplicative_order,
)
from dicing.ivsetup import IV_LENGTH, compute_c, constant_c_int
from dicing.keyschedule import KEY_SIZES, sbox0_table
from utils.benchmark import Benchmark
from utils.file_io import write_bytes_atomic, xor_file
from utils.observability import (
    ComponentType,
    OperationType,
    configure_logging,
    get_logger,
    get_observability_manager,
)
import verification

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SELFTEST = 2
EXIT_IO = 3

console = Console()
logger = get_logger(ComponentType.CLI)


class UsageError(Exception):
    """Bad command-line input; exit status 1"""


class CliParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad input; usage errors here are status 1"""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_hex(value: str, what: str) -> bytes:
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise ValueError(f"{what} is not valid hex") from None


class CliConfig(BaseModel):
    """Validated command-line inputs"""

    key: Optional[str] = None
    iv: Optional[str] = None
    mode: VariantMode = VariantMode.STANDARD
    length: int = 0
    input: Optional[str] = None
    output: Optional[str] = None
    format: Optional[str] = None

    @field_validator("key")
    @classmethod
    def _check_key(cls, value: Optional[str]) -> Optional[str]:
        if value is None:
            return value
        raw = _parse_hex(value, "key")
        if len(raw) not in KEY_SIZES:
            raise ValueError(
                f"unsupported key size: {len(raw)} bytes (expected 16 or 32 bytes)"
            )
        return value.lower()

    @field_validator("iv")
    @classmethod
    def _check_iv(cls, value: Optional[str]) -> Optional[str]:
        if value is None:
            return value
        if len(_parse_hex(value, "iv")) > IV_LENGTH:
            raise ValueError(f"iv longer than {IV_LENGTH} bytes")
        return value.lower()

    @field_validator("length")
    @classmethod
    def _check_length(cls, value: int) -> int:
        if value < 0:
            raise ValueError("length must be nonnegative")
        return value

    @field_validator("format")
    @classmethod
    def _check_format(cls, value: Optional[str]) -> Optional[str]:
        if value not in (None, "hex", "raw"):
            raise ValueError("format must be hex or raw")
        return value

    @property
    def key_bytes(self) -> bytes:
        return bytes.fromhex(self.key or "")

    @property
    def iv_bytes(self) -> bytes:
        """IV zero-padded on the right to 32 bytes"""
        return bytes.fromhex(self.iv or "").ljust(IV_LENGTH, b"\x00")

    @property
    def output_format(self) -> str:
        if self.format:
            return self.format
        return "raw" if self.output else "hex"

    def generator(self) -> KeystreamGenerator:
        return KeystreamGenerator.from_key_iv(self.key_bytes, self.iv_bytes, self.mode)


def build_parser() -> CliParser:
    parser = CliParser(
        prog="dicing",
        description="DICING stream cipher tools",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s keystream --key 00..0f --iv 00 --len 64        # hex keystream on stdout
  %(prog)s encrypt --key KEY --iv IV --in plain --out ct  # file encryption
  %(prog)s decrypt --key KEY --iv IV --in ct --out plain  # same operation
  %(prog)s selftest                                       # fast verification subset
  %(prog)s bench --mb 4                                   # throughput report
  %(prog)s constants                                      # derived constants
        """,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    modes = [m.value for m in VariantMode]

    def cipher_args(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--key", required=True, help="32 or 64 hex digits")
        sub.add_argument("--iv", required=True, help="up to 64 hex digits")
        sub.add_argument("--mode", choices=modes, default=None, help="cipher variant")

    ks = subparsers.add_parser("keystream", help="Emit keystream bytes")
    cipher_args(ks)
    ks.add_argument("--len", dest="length", type=int, required=True, help="byte count")
    ks.add_argument("--out", dest="output", help="output file (default: stdout)")
    fmt = ks.add_mutually_exclusive_group()
    fmt.add_argument("--hex", dest="format", action="store_const", const="hex")
    fmt.add_argument("--raw", dest="format", action="store_const", const="raw")

    for name in ("encrypt", "decrypt"):
        sub = subparsers.add_parser(name, help=f"{name.title()} a file")
        cipher_args(sub)
        sub.add_argument("--in", dest="input", required=True, help="input file")
        sub.add_argument("--out", dest="output", required=True, help="output file")

    selftest = subparsers.add_parser("selftest", help="Run the verification self-test")
    selftest.add_argument(
        "--preset", default="selftest", choices=["selftest", "quick", "full"]
    )

    bench = subparsers.add_parser("bench", help="Measure keystream throughput")
    bench.add_argument("--mb", type=float, required=True, help="megabytes per run")
    bench.add_argument("--mode", choices=modes, default=None)

    subparsers.add_parser("constants", help="Print derived constants")
    return parser


def _cli_config(args: argparse.Namespace, default_mode: str) -> CliConfig:
    try:
        return CliConfig(
            key=getattr(args, "key", None),
            iv=getattr(args, "iv", None),
            mode=getattr(args, "mode", None) or default_mode,
            length=getattr(args, "length", 0) or 0,
            input=getattr(args, "input", None),
            output=getattr(args, "output", None),
            format=getattr(args, "format", None),
        )
    except ValidationError as e:
        message = "; ".join(err["msg"].removeprefix("Value error, ") for err in e.errors())
        raise UsageError(message) from None


def cmd_keystream(cfg: CliConfig) -> int:
    stream = cfg.generator().keystream(cfg.length)
    payload = stream.hex().encode() if cfg.output_format == "hex" else stream
    if cfg.output:
        write_bytes_atomic(cfg.output, payload)
    elif cfg.output_format == "hex":
        sys.stdout.write(stream.hex() + "\n")
    else:
        sys.stdout.buffer.write(stream)
        sys.stdout.flush()
    return EXIT_OK


def cmd_crypt(cfg: CliConfig, chunk_size: int) -> int:
    """Encryption and decryption are the same XOR"""
    processed = xor_file(cfg.generator(), cfg.input, cfg.output, chunk_size)
    logger.info("File processed", n_bytes=processed, mode=cfg.mode.value)
    return EXIT_OK


def cmd_selftest(preset: str) -> int:
    report = verification.run_selftest(get_config(preset))

    table = Table(title="DICING self-test")
    table.add_column("Check", style="cyan", no_wrap=True)
    table.add_column("Result")
    table.add_column("Detail", style="white")
    for check in report.checks:
        if check.informational:
            result = "[blue]info[/blue]"
        elif check.passed:
            result = "[green]pass[/green]"
        else:
            result = "[bold red]FAIL[/bold red]"
        table.add_row(check.name, result, check.detail)
    console.print(table)

    if report.passed:
        console.print("[bold green]All checks passed[/bold green]")
        return EXIT_OK
    console.print(f"[bold red]Failed: {', '.join(report.failures)}[/bold red]")
    return EXIT_SELFTEST


def cmd_bench(megabytes: float, mode: str) -> int:
    if megabytes <= 0:
        raise UsageError("--mb must be positive")
    config = get_config()
    bench = Benchmark(
        repetitions=config.get("bench_repetitions"),
        setup_iterations=config.get("bench_setup_iterations"),
        assumed_clock_hz=config.get("assumed_clock_hz"),
        target_mb_per_s=config.get("target_mb_per_s"),
        target_cycles_per_byte=config.get("target_cycles_per_byte"),
    )
    report = bench.run(megabytes, VariantMode(mode))

    table = Table(title=f"Report of performance ({report.mode}, {megabytes:g} MB)")
    table.add_column("Item", style="cyan")
    table.add_column("Value", justify="right")
    table.add_row("Keysetup", f"{report.keysetup_ms:.3f} ms")
    table.add_row("IVsetup", f"{report.ivsetup_ms:.3f} ms")
    for i, rate in enumerate(report.throughputs, 1):
        table.add_row(f"Run {i}", f"{rate / 1e6:.3f} MB/s")
    table.add_row("Spread across runs", f"{report.spread:.1%}")
    table.add_row(
        f"Cycles/byte (estimate, {report.clock_source} clock)",
        f"{report.cycles_per_byte:.1f}",
    )
    table.add_row(
        "Cycles/block (estimate)", f"{report.cycles_per_byte * 16:.0f}"
    )
    console.print(table)
    if not report.meets_targets:
        console.print(
            f"[yellow]Below the {report.target_mb_per_s:g} MB/s / "
            f"{report.target_cycles_per_byte:g} cycles/byte target (informational)[/yellow]"
        )
    return EXIT_OK


def tables_digest() -> str:
    """SHA-256 over every key-independent table: S0, field reductions and c"""
    digest = hashlib.sha256()
    digest.update(bytes(sbox0_table()))
    for name, spec in CIPHER_FIELDS.items():
        width = spec.byte_length
        digest.update(name.encode())
        for entry in spec.reduction_table:
            digest.update(entry.to_bytes(width, "little"))
    digest.update(compute_c())
    return digest.hexdigest()


def cmd_constants() -> int:
    c = constant_c_int()
    console.print("[bold]c = floor(e * 57!)[/bold]")
    console.print(f"  big-endian hex:    {c.to_bytes(32, 'big').hex()}", highlight=False)
    console.print(f"  little-endian hex: {compute_c().hex()}", highlight=False)

    table = Table(title="Polynomials (exponents with nonzero coefficient)")
    table.add_column("Name", style="cyan")
    table.add_column("Exponents")
    for name, form in POLYNOMIAL_FORMS.items():
        table.add_row(name, ", ".join(map(str, exponents(expand_polynomial(form)))))
    console.print(table)

    console.print(f"Order of x in K: {multiplicative_order(FIELD_K.x())}")
    hat = verification.check_variant_polynomial()
    console.print(f"Degree-256 variant: {hat.detail}")

    periods = Table(title="Full-scale periods")
    periods.add_column("Sequence", style="cyan")
    periods.add_column("Period")
    for name, value in verification.full_scale_periods().items():
        periods.add_row(name, str(value))
    console.print(periods)

    console.print(f"Key-independent tables SHA-256: {tables_digest()}", highlight=False)
    return EXIT_OK


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    config = get_config()
    configure_logging(config.get_log_level())
    obs = get_observability_manager()

    try:
        with obs.operation_context(
            OperationType.FILE_CIPHER
            if args.command in ("encrypt", "decrypt")
            else OperationType.KEYSTREAM,
            ComponentType.CLI,
            f"cmd_{args.command}",
            command=args.command,
            mode=getattr(args, "mode", None),
        ):
            if args.command == "keystream":
                return cmd_keystream(_cli_config(args, config.get("mode")))
            if args.command in ("encrypt", "decrypt"):
                return cmd_crypt(
                    _cli_config(args, config.get("mode")), config.get("chunk_size")
                )
            if args.command == "selftest":
                return cmd_selftest(args.preset)
            if args.command == "bench":
                return cmd_bench(args.mb, args.mode or config.get("mode"))
            return cmd_constants()

    except (UsageError, DicingError) as e:
        print(f"dicing: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        path = e.filename or ""
        print(f"dicing: I/O error: {path}: {e.strerror or e}", file=sys.stderr)
        return EXIT_IO


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
