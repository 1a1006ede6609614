"""Problem generation, optimality oracle, suite runner and metrics."""

from .generator import (
    all_blocksworld_instances,
    configuration_count,
    enumerate_towers,
    gen_blocksworld,
    gen_blocksworld_text,
    optimal_length_oracle,
    random_towers,
    write_blocksworld,
)
from .records import (
    HISTOGRAM_COLUMNS,
    RECORD_COLUMNS,
    SUMMARY_COLUMNS,
    RunRecord,
    capped_wmq,
    histogram,
    histogram_csv,
    read_records,
    records_csv,
    summarize,
    summary_csv,
)
from .suite import ConfigError, PlannerSpec, SuiteConfig, SuiteResult, run_one, run_suite

__all__ = [
    "all_blocksworld_instances", "configuration_count", "enumerate_towers", "gen_blocksworld", "gen_blocksworld_text",
    "optimal_length_oracle", "random_towers", "write_blocksworld", "HISTOGRAM_COLUMNS", "RECORD_COLUMNS",
    "SUMMARY_COLUMNS", "RunRecord", "capped_wmq", "histogram", "histogram_csv", "read_records", "records_csv",
    "summarize", "summary_csv", "ConfigError", "PlannerSpec", "SuiteConfig", "SuiteResult", "run_one", "run_suite",
]
