from docseg.evaluation.metrics import DocumentCounts, MetricReport, positive_prf, document_counts, report_from_counts
from docseg.evaluation.metrics import evaluate_segmentations, format_report, save_report
from docseg.evaluation.significance import SignificanceSummary, compare_runs, format_significance
from docseg.evaluation.bench import BenchRow, BenchReport, bench_sweep, format_bench_table, bench_series
from docseg.evaluation.bench import save_bench, load_bench
