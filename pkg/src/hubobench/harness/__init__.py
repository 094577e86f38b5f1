"""Benchmark harness: result log, grid runner, trace import, reports, CLI."""
from hubobench.harness.bench import cell_seed, run_bench, summarize
from hubobench.harness.records import ResultLog, canonical_record, read_records
from hubobench.harness.report import summary_table, write_report
from hubobench.harness.spec import BenchmarkSpec, SpecError, load_spec, parse_spec
from hubobench.harness.traces import import_trace

__all__ = [
    "BenchmarkSpec",
    "ResultLog",
    "SpecError",
    "canonical_record",
    "cell_seed",
    "import_trace",
    "load_spec",
    "parse_spec",
    "read_records",
    "run_bench",
    "summarize",
    "summary_table",
    "write_report",
]
