import math

from rich.console import Console
from rich.table import Table

from sinsalign.bench.runner import BenchResult


class MetricsTablePrinter:
    """
    Prints the windowed heading RMSE of a benchmark run as a Rich table,
    one row per (method, window), followed by the excluded-run counts.
    """

    def __init__(self, result: BenchResult, console: Console | None = None):
        self._result = result
        self._console = console or Console()

    def build_table(self) -> Table:
        columns = [
            ("Method", "cyan", None),
            ("Window (s)", "blue", "center"),
            ("RMSE (deg)", "green", "right"),
            ("Runs", "magenta", "right"),
        ]
        table = Table(title="Average heading RMSE")
        for name, style, justify in columns:
            kwargs = {"style": style}
            if justify:
                kwargs["justify"] = justify
            table.add_column(name, **kwargs)

        for row in self._result.rows:
            rmse = "n/a" if math.isnan(row.rmse_deg) else f"{row.rmse_deg:.4f}"
            table.add_row(row.method, f"{row.window_start:g}-{row.window_end:g}", rmse, str(row.runs_used))
        return table

    def print_metrics(self):
        self._console.print(self.build_table())
        for method, runs in self._result.diverged.items():
            if runs:
                self._console.print(f"[yellow]{method}: {len(runs)} diverged run(s): {runs}[/yellow]")
        for method, count in self._result.failed.items():
            if count:
                self._console.print(f"[red]{method}: {count} failed run(s) excluded[/red]")
