"""
spectre-bench: command-line harness untuk sweep, verify, generate, init, dan tpot.

Exit code: 0 sukses, 1 cek gagal, 2 usage/config/kapasitas, 3 I/O atau format.
"""

from typing import List, Optional
import argparse
import asyncio
import logging
import sys

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import (
    CapacityError,
    ConfigError,
    FormatError,
    InputError,
    InsufficientData,
    ShapeError,
    StateError,
)
from app.models.config_models import KERNELS, ModelConfig, SweepSpec, VerifyConfig
from app.services.bench_service import BenchService
from app.services.verification_service import VerificationService
from app.utils.evaluation import slope_fit
from app.utils.report import emit_csv

logger = logging.getLogger("spectre_bench")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def parse_length(token: str) -> int:
    """'512', '4k', '128k' -> int (k = 1024)."""
    token = token.strip().lower()
    try:
        if token.endswith("k"):
            return int(token[:-1]) * 1024
        return int(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"Panjang sekuens tidak valid: {token}")


def parse_lengths(value: str) -> List[int]:
    return [parse_length(token) for token in value.split(",") if token.strip()]


def parse_kernels(value: str) -> List[str]:
    kernels = [token.strip() for token in value.split(",") if token.strip()]
    unknown = [k for k in kernels if k not in KERNELS]
    if unknown:
        raise argparse.ArgumentTypeError(
            f"Kernel tidak dikenal: {', '.join(unknown)} (pilihan: {', '.join(KERNELS)})"
        )
    return kernels


def _add_model_args(parser: argparse.ArgumentParser, n_max: int, layers: int) -> None:
    parser.add_argument("--n-max", type=parse_length, default=n_max)
    parser.add_argument("--d", type=int, default=32, help="Dimensi per head")
    parser.add_argument("--heads", type=int, default=4)
    parser.add_argument("--layers", type=int, default=layers)
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.add_argument("--f64", action="store_true", help="Presisi float64")


def _model_config(args: argparse.Namespace, **extra) -> ModelConfig:
    return ModelConfig(
        n_layers=args.layers,
        heads=args.heads,
        d=args.d,
        n_max=args.n_max,
        seed=args.seed,
        precision="f64" if args.f64 else "f32",
        **extra,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectre-bench",
        description="Benchmark dan verifikasi SPECTRE spectral token mixer",
    )
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Sweep latency/throughput terhadap panjang sekuens")
    sweep.add_argument("--lengths", type=parse_lengths, default=[512, 1024, 4096, 8192, 32768])
    sweep.add_argument("--kernels", type=parse_kernels, default=["spectre", "naive-attention"])
    sweep.add_argument("--repeats", type=int, default=5)
    sweep.add_argument("--warmup", type=int, default=1)
    sweep.add_argument("--decode-steps", type=int, default=256)
    sweep.add_argument("--csv", default=None, help="Path CSV keluaran")
    sweep.add_argument("--parallel", action="store_true", help="Paralelkan sel (kernel, L)")
    sweep.add_argument(
        "--allow-128k",
        action="store_true",
        help=f"Izinkan panjang hingga {settings.LONG_CONTEXT_LENGTH} (hanya f32)",
    )
    _add_model_args(sweep, n_max=32768, layers=2)

    verify = sub.add_parser("verify", help="Jalankan suite oracle")
    verify.add_argument("--n-max", type=parse_length, default=256)
    verify.add_argument("--d", type=int, default=16)
    verify.add_argument("--f64", action="store_true")
    verify.add_argument("--steps", type=int, default=10000, help="Langkah decode cek koherensi")
    verify.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    verify.add_argument("--corrupt-twiddles", action="store_true", help=argparse.SUPPRESS)

    generate = sub.add_parser("generate", help="Generasi streaming dari file bobot")
    generate.add_argument("--weights", required=True)
    generate.add_argument("--prompt-len", type=int, default=16)
    generate.add_argument("--steps", type=int, default=32)
    generate.add_argument("--kernel", choices=KERNELS, default="spectre")
    generate.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)

    init = sub.add_parser("init", help="Tulis bobot acak ke container .spcw")
    init.add_argument("--out", required=True)
    init.add_argument("--vocab", type=int, default=0)
    init.add_argument("--memory-tokens", type=int, default=0)
    init.add_argument("--share-gates", action="store_true")
    _add_model_args(init, n_max=512, layers=4)

    tpot = sub.add_parser("tpot", help="Ukur kerataan TPOT pada steady state")
    _add_model_args(tpot, n_max=4096, layers=1)
    return parser


async def cmd_sweep(args: argparse.Namespace) -> int:
    if args.allow_128k and args.f64:
        raise ConfigError("--allow-128k hanya tersedia untuk presisi f32")
    spec = SweepSpec(
        lengths=args.lengths,
        kernels=args.kernels,
        repeats=args.repeats,
        warmup=args.warmup,
        decode_steps=args.decode_steps,
        parallel=args.parallel,
    )
    rows = await BenchService().run_sweep(spec, _model_config(args), args.allow_128k)
    for row in rows:
        tpot = "n/a" if row.tpot_ms is None else f"{row.tpot_ms:.4f}"
        print(
            f"{row.kernel:16s} L={row.seq_len:<7d} latency={row.median_latency_ms:.3f} ms "
            f"throughput={row.throughput_tok_per_s:.1f} tok/s ttft={row.ttft_ms:.3f} ms "
            f"tpot={tpot} ms state={row.bytes_state} B"
        )
    try:
        for kernel, fit in slope_fit(rows).items():
            print(f"alpha[{kernel}] = {fit.alpha:.3f} (residual {fit.residual:.4f})")
    except InsufficientData as e:
        logger.info(f"Slope fit skipped: {e}")
    if args.csv:
        emit_csv(rows, args.csv)
    return EXIT_OK


async def cmd_verify(args: argparse.Namespace) -> int:
    cfg = VerifyConfig(
        n_max=args.n_max,
        d=args.d,
        precision="f64" if args.f64 else "f32",
        seed=args.seed,
        decode_steps=args.steps,
    )
    report = await VerificationService().verify(cfg, corrupt_twiddles=args.corrupt_twiddles)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name} max_error={check.max_error:.3e} tol={check.tolerance:.1e}")
    print("ALL CHECKS PASSED" if report.passed else "VERIFY FAILED")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


async def cmd_generate(args: argparse.Namespace) -> int:
    report = await BenchService().generate(
        args.weights, args.prompt_len, args.steps, args.kernel, args.seed
    )
    print(report.json())
    return EXIT_OK


async def cmd_init(args: argparse.Namespace) -> int:
    cfg = _model_config(
        args,
        vocab_size=args.vocab,
        memory_tokens=args.memory_tokens,
        share_gates=args.share_gates,
    )
    tally = await BenchService().init_weights(cfg, args.out)
    print(
        f"wrote {args.out}: total={tally['total']} spectre_per_head={tally['spectre_per_head']} "
        f"ratio={tally['ratio']:.4f} spectre_total={tally['spectre_total']} "
        f"spectre_total_ratio={tally['spectre_total_ratio']:.4f}"
    )
    return EXIT_OK


async def cmd_tpot(args: argparse.Namespace) -> int:
    result = await BenchService().measure_tpot_flatness(_model_config(args))
    print(
        f"N_max={result.n_max} early={result.early_ms:.4f} ms late={result.late_ms:.4f} ms "
        f"ratio={result.ratio:.2f} {'PASS' if result.passed else 'FAIL'}"
    )
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


COMMANDS = {
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "generate": cmd_generate,
    "init": cmd_init,
    "tpot": cmd_tpot,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level)
    try:
        return asyncio.run(COMMANDS[args.command](args))
    except (FormatError, OSError) as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except (
        ConfigError,
        CapacityError,
        InputError,
        ShapeError,
        StateError,
        ValidationError,
    ) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
