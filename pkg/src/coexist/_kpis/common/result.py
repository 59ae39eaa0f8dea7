from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from io import StringIO
from typing import Dict
from typing import Iterator
from typing import List
from typing import Optional
from typing import Tuple
from typing import Union

from rich.console import Console
from rich.console import ConsoleRenderable
from rich.console import RenderableType
from rich.console import RenderGroup
from rich.console import render_group
from rich.measure import measure_renderables
from rich.segment import Segment
from rich.text import Text

from coexist._kpis.common.core import make_failures_msg
from coexist._kpis.common.pprint import make_warning
from coexist._kpis.common.pprint import pretty_provenance
from coexist._kpis.common.typing import Provenance

__all__ = ["KpiResult", "make_kpi_list", "smartround"]


KPI_FIELDS = (
    ("success_probability", "P(success)", ""),
    ("ack_probability", "P(ack)", ""),
    ("delivery_probability", "P(delivery)", ""),
    ("mean_transmissions", "transmissions", ""),
    ("expected_delay", "delay", "s"),
    ("energy_per_report", "energy/report", "J"),
    ("battery_lifetime", "lifetime", "s"),
)


@dataclass
class KpiResult(ConsoleRenderable):
    """Key performance indicators of a reference device at one distance

    ``ci_halfwidth`` maps field names to 95% confidence half-widths and is
    only present for Monte Carlo results.
    """

    success_probability: float
    ack_probability: float
    delivery_probability: float
    mean_transmissions: float
    expected_delay: float
    energy_per_report: float
    battery_lifetime: float
    provenance: Provenance = "analytic"
    ci_halfwidth: Optional[Dict[str, float]] = None
    failures: List[str] = field(default_factory=list)

    def as_dict(self) -> Dict[str, float]:
        """KPI fields only, for tabulation"""
        fields = asdict(self)
        return {name: fields[name] for name, _, _ in KPI_FIELDS}

    def _render(self) -> Iterator[RenderableType]:
        title = Text.assemble("KPIs ", "(", pretty_provenance(self.provenance), ")")
        rows = []
        for name, label, unit in KPI_FIELDS:
            value = f"{smartround(getattr(self, name), 4)}"
            if self.ci_halfwidth and name in self.ci_halfwidth:
                value += f" ± {smartround(self.ci_halfwidth[name], 4)}"
            if unit:
                value += f" {unit}"
            rows.append((label, value))

        yield make_kpi_list(title, *rows)

    @property
    def renderables(self) -> List[RenderableType]:
        renderables = list(self._render())

        if self.failures:
            msg = make_failures_msg(self.failures)
            renderables.insert(0, make_warning(msg))

        return renderables

    def __rich_console__(self, console, options):
        newline = Segment.line()
        *renderables, last_renderable = self.renderables

        for renderable in renderables:
            yield renderable
            yield newline
        yield last_renderable

    def __rich_measure__(self, console, max_width):
        return measure_renderables(console, self.renderables, max_width)

    def print(self, **kwargs):
        """Prints results contents to notebook or terminal environment"""
        console = Console()
        console.print(self, **kwargs)

    def __str__(self):
        # Mocks file as the stdout of a Rich Console
        buf = StringIO()
        console = Console(file=buf, force_jupyter=False)
        console.print(self)

        return buf.getvalue()


@render_group(fit=True)
def make_kpi_list(
    title: Union[str, Text], *varname_value_pairs: Tuple[str, str]
) -> RenderGroup:
    yield Text(title, style="bold") if isinstance(title, str) else title

    varnames, values = zip(*varname_value_pairs)
    varname_maxlen = max(len(varname) for varname in varnames)

    for varname, value in zip(varnames, values):
        yield f"  {varname.ljust(varname_maxlen)}  {value}"


def smartround(num: float, ndigits=3) -> Union[int, float]:
    """Round to significant digits, keeping integers as integers"""
    num = float(num)
    if num.is_integer():
        return int(num)
    elif num == 0 or abs(num) >= 10 ** ndigits or abs(num) < 10 ** -ndigits:
        return float(f"{num:.{ndigits}g}")
    else:
        return round(num, ndigits)
