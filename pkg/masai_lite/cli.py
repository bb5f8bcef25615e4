"""
Command-line frontend.

    masai-lite index GENOME.fa [-o GENOME.fa.idx]
    masai-lite map INDEX READS (-e K | --error-rate P) [options]
    masai-lite bench INDEX GENOME.fa [options]

Exit codes: 0 success, 1 usage, 2 input format, 3 internal error or (bench)
violated thresholds.
"""
import argparse
import logging
import sys
import time
from typing import Optional, Sequence

from pydantic import BaseModel, Field, ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from masai_lite import __version__
from masai_lite.errors import InputError, MasaiError, UsageError
from masai_lite.filter import StrategyOverride
from masai_lite.index import EsaIndex, load_index, save_index
from masai_lite.io import read_fasta, read_reads, write_fastq, write_sam
from masai_lite.mapper import MapperConfig, MappingMode, MappingStats, map_reads
from masai_lite.oracle import DEFAULT_INDEL_FRACTION, evaluate, oracle_map, simulate_reads
from masai_lite.settings import Settings, _level_names_mapping, get_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_THRESHOLDS = 3


class BenchConfig(BaseModel):
    reads: int = Field(1000, ge=1, description="Number of simulated reads.")
    read_length: int = Field(100, ge=1)
    errors: int = Field(5, ge=0, description="Largest number of planted edits, also the mapping k.")
    indel_fraction: float = Field(DEFAULT_INDEL_FRACTION, ge=0.0, le=1.0)
    rng_seed: int = 0
    window: int = Field(10, ge=0, description="Recall tolerance in bp.")
    min_all: Optional[float] = Field(None, ge=0, le=100)
    min_any_best: Optional[float] = Field(None, ge=0, le=100)
    min_recall: Optional[float] = Field(None, ge=0, le=100)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _stderr() -> Console:
    return Console(stderr=True)


def _add_strategy_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--seeds", type=int, help="Number of seeds per read (at most k+1).")
    group.add_argument("--seed-length", type=int, help="Seed length; seeds = min(read length // L, k+1).")
    group.add_argument("--seed-errors", type=int, help="Largest per-seed error budget.")


def _add_mapping_flags(parser: argparse.ArgumentParser) -> None:
    _add_strategy_flags(parser)
    parser.add_argument(
        "--mode",
        choices=[m.value for m in MappingMode],
        default=MappingMode.ALL.value,
        help="Report all locations, all minimum-error locations or one of them.",
    )
    parser.add_argument("--no-indels", action="store_true", help="Count mismatches only.")
    parser.add_argument("--threads", type=int, help="Worker processes (default: $MASAI_LITE_THREADS or 1).")
    parser.add_argument("--batch-size", type=int, default=100_000, help="Reads per pattern trie.")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="masai-lite", description="Approximate read mapping with multiple backtracking.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More log output (-vv for debug).")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("index", help="Build the genome index.")
    p.add_argument("genome", help="Genome FASTA file.")
    p.add_argument("-o", "--output", help="Index file (default: GENOME.idx).")
    p.set_defaults(handler=cmd_index)

    p = commands.add_parser("map", help="Map reads and write SAM.")
    p.add_argument("index", help="Index built by `masai-lite index`.")
    p.add_argument("reads", help="Reads in FASTQ or FASTA.")
    p.add_argument("-o", "--output", default="-", help="SAM output (default: standard output).")
    errors = p.add_mutually_exclusive_group(required=True)
    errors.add_argument("-e", "--errors", type=int, help="Absolute number of edits per read.")
    errors.add_argument("--error-rate", type=float, help="Edits as a percentage of each read's length.")
    _add_mapping_flags(p)
    p.add_argument("--report-unmapped", action="store_true", help="Emit flag-4 records for unmapped reads.")
    p.set_defaults(handler=cmd_map)

    p = commands.add_parser("bench", help="Simulate reads and score the mapper against the full-scan oracle.")
    p.add_argument("index", help="Index built by `masai-lite index`.")
    p.add_argument("genome", help="The FASTA file the index was built from.")
    p.add_argument("--reads", type=int, default=1000, help="Number of simulated reads.")
    p.add_argument("--read-length", type=int, default=100)
    p.add_argument("-e", "--errors", type=int, default=5, help="Largest number of planted edits and the mapping k.")
    p.add_argument(
        "--indel-fraction", type=float, default=DEFAULT_INDEL_FRACTION, help="Probability of an edit being an indel."
    )
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--window", type=int, default=10, help="Recall tolerance around the origin in bp.")
    _add_mapping_flags(p)
    p.add_argument("--reads-out", help="Also write the simulated reads here as FASTQ.")
    p.add_argument("--sam", help="Also write the mapper's SAM output here.")
    p.add_argument("--report", help="Also write the TSV report here.")
    p.add_argument("--min-all", type=float, help="Fail when the overall all-score is below this percentage.")
    p.add_argument("--min-any-best", type=float, help="Fail when the overall any-best score is below this percentage.")
    p.add_argument("--min-recall", type=float, help="Fail when the overall recall is below this percentage.")
    p.set_defaults(handler=cmd_bench)
    return parser


def _configure_logging(verbosity: int, settings: Settings) -> None:
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = _level_names_mapping()[settings.log_level]
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=_stderr(), rich_tracebacks=True, show_path=False)],
        force=True,
    )


def _mapper_config(args: argparse.Namespace, settings: Settings, **error_spec) -> MapperConfig:
    try:
        return MapperConfig(
            **error_spec,
            strategy=StrategyOverride(
                seeds=args.seeds, seed_length=args.seed_length, seed_errors=args.seed_errors
            ),
            mode=MappingMode(args.mode),
            indels=not args.no_indels,
            batch_size=args.batch_size,
            report_unmapped=getattr(args, "report_unmapped", False),
            threads=args.threads if args.threads is not None else settings.threads,
        )
    except ValidationError as e:
        raise UsageError(f"invalid mapping options: {e}") from e


def _summary_table(title: str, rows: Sequence[tuple[str, str]]) -> Table:
    table = Table(title=title, show_header=False)
    table.add_column("item", style="cyan")
    table.add_column("value", justify="right")
    for item, value in rows:
        table.add_row(item, value)
    return table


def _mapping_rows(stats: MappingStats, elapsed: float) -> list[tuple[str, str]]:
    mapped_pct = 100.0 * stats.mapped / stats.reads if stats.reads else 0.0
    return [
        ("reads", str(stats.reads)),
        ("mapped", f"{stats.mapped} ({mapped_pct:.2f}%)"),
        ("too short", str(stats.too_short)),
        ("locations", str(stats.locations)),
        ("verifications", str(stats.verifications)),
        ("wall time", f"{elapsed:.2f}s"),
    ]


def cmd_index(args: argparse.Namespace, settings: Settings) -> int:
    started = time.perf_counter()
    genome = read_fasta(args.genome)
    index = EsaIndex.build(genome)
    output = args.output or f"{args.genome}.idx"
    save_index(index, output)
    elapsed = time.perf_counter() - started
    logger.info(f"Wrote index to {output}")
    _stderr().print(
        _summary_table(
            "Index",
            [("length", str(len(genome))), ("contigs", str(len(genome.contigs))), ("build time", f"{elapsed:.2f}s")],
        )
    )
    return EXIT_OK


def cmd_map(args: argparse.Namespace, settings: Settings) -> int:
    config = _mapper_config(args, settings, k=args.errors, error_rate=args.error_rate)
    started = time.perf_counter()
    index = load_index(args.index)
    reads = read_reads(args.reads)
    if not reads:
        logger.warning(f"{args.reads}: no reads")
    results, stats = map_reads(index, reads, config)
    write_sam(index.genome, reads, results, args.output, report_unmapped=config.report_unmapped)
    _stderr().print(_summary_table("Mapping", _mapping_rows(stats, time.perf_counter() - started)))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, settings: Settings) -> int:
    try:
        bench = BenchConfig(
            reads=args.reads,
            read_length=args.read_length,
            errors=args.errors,
            indel_fraction=args.indel_fraction,
            rng_seed=args.rng_seed,
            window=args.window,
            min_all=args.min_all,
            min_any_best=args.min_any_best,
            min_recall=args.min_recall,
        )
    except ValidationError as e:
        raise UsageError(f"invalid bench options: {e}") from e
    config = _mapper_config(args, settings, k=bench.errors)

    index = load_index(args.index)
    genome = read_fasta(args.genome)
    if genome != index.genome:
        raise InputError(f"{args.genome} is not the genome {args.index} was built from")

    # --- Step 1: simulate and map ---
    reads, origins = simulate_reads(
        genome, bench.reads, bench.read_length, bench.errors, bench.indel_fraction, bench.rng_seed
    )
    if args.reads_out:
        write_fastq(reads, args.reads_out)
    started = time.perf_counter()
    results, stats = map_reads(index, reads, config)
    map_time = time.perf_counter() - started
    if args.sam:
        write_sam(genome, reads, results, args.sam)

    # --- Step 2: full-scan oracle ---
    started = time.perf_counter()
    oracle_hits = {read.id: oracle_map(genome, read, bench.errors, indels=config.indels) for read in reads}
    logger.info(f"Oracle scanned {len(reads)} reads in {time.perf_counter() - started:.2f}s")

    # --- Step 3: score ---
    report = evaluate(
        {read.id: result.matches for read, result in zip(reads, results)},
        oracle_hits,
        {origin.read_id: origin for origin in origins},
        window_bp=bench.window,
    )
    sys.stdout.write(report.to_tsv())
    if args.report:
        with open(args.report, "w") as handle:
            handle.write(report.to_tsv())
    console = _stderr()
    console.print(_summary_table("Mapping", _mapping_rows(stats, map_time)))
    console.print(report.to_table())

    failed = report.violations(bench.min_all, bench.min_any_best, bench.min_recall)
    for message in failed:
        logger.error(f"Threshold violated: {message}")
    return EXIT_THRESHOLDS if failed else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = get_settings()
    except UsageError as e:
        _stderr().print(f"[bold red]error:[/bold red] {e}")
        return e.exit_code
    _configure_logging(args.verbose, settings)

    try:
        return args.handler(args, settings)
    except MasaiError as e:
        logger.error(str(e))
        return e.exit_code
    except Exception:
        logger.error("Unexpected error", exc_info=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
