import warnings
from functools import wraps
from numbers import Real
from typing import Callable
from typing import Dict
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from warnings import warn

from rich.progress import Progress
from scipy.integrate import IntegrationWarning
from scipy.integrate import quad

from coexist._kpis.common.exceptions import NegativeDistanceError
from coexist._kpis.common.exceptions import QuadratureError
from coexist._kpis.model import Scenario
from coexist._kpis.model import check_index
from coexist._kpis.model import ensure_valid

__all__ = [
    "CliContext",
    "kpi",
    "integrate",
    "check_distance",
    "set_task_total",
    "advance_task",
    "check_recommendations",
]


class CliContext(NamedTuple):
    progress: Progress
    task: int


def integrate(
    func: Callable[[float], float],
    a: float,
    b: float,
    what: str,
    points: Sequence[float] = (),
    epsabs: float = 1e-9,
) -> float:
    """Adaptive quadrature of ``func`` over ``[a, b]``

    ``points`` are interior locations where ``func`` is not smooth. Any
    ``IntegrationWarning`` is promoted to an error, as a result which did not
    meet ``epsabs`` is unusable.

    Raises
    ------
    QuadratureError
        If the quadrature did not converge
    """
    points = sorted({p for p in points if a < p < b})

    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(
                func,
                a,
                b,
                points=points or None,
                epsabs=epsabs,
                epsrel=1e-10,
                limit=200,
            )
        except IntegrationWarning as e:
            raise QuadratureError(what, str(e).strip()) from e

    return value


def check_distance(d: Real):
    if not d >= 0:
        raise NegativeDistanceError(d)


def kpi(func):
    """Decorator for operations evaluated for a reference class at a distance

    The wrapped function has the signature ``func(j, d, s, *args, **kwargs)``.
    The wrapper refuses invalid scenarios, out-of-range class indices and
    negative (or NaN) link distances before calling it.

    Raises
    ------
    InvalidScenarioError
        If ``s`` breaks any invariant
    ClassIndexError
        If ``j`` is not a class of ``s``
    NegativeDistanceError
        If ``d`` is negative
    """

    @wraps(func)
    def wrapper(j: int, d: Real, s: Scenario, *args, **kwargs):
        ensure_valid(s)
        check_index(j, s)
        check_distance(d)

        return func(j, float(d), s, *args, **kwargs)

    return wrapper


def progress_context(func):
    @wraps(func)
    def wrapper(ctx: Optional[CliContext], *args):
        if ctx:
            progress, task = ctx
            func(progress, task, *args)

    return wrapper


@progress_context
def set_task_total(progress, task, total: int):
    progress.update(task, total=total)


@progress_context
def advance_task(progress, task, advance: int = 1):
    progress.update(task, advance=advance)


def check_recommendations(ctx: Optional[CliContext], recommendations: Dict[str, bool]):
    """Warns on recommendation failures

    Parameters
    ----------
    recommendations : ``Dict[str, bool]``
        Map of recommendation string representations to the actual
        recommendation outcomes

    Warns
    -----
    UserWarning
        When one or more recommendations fail and no CLI context is passed
    """
    failures = [expr for expr, success in recommendations.items() if not success]

    if failures and not ctx:
        warn(make_failures_msg(failures), UserWarning)

    return failures


def make_failures_msg(failures: List[str]) -> str:
    nfail = len(failures)

    if nfail == 1:
        return f"Recommendation not met: {failures[0]}"

    msg = "Multiple recommendations not met:\n"
    msg += "\n".join([f"  • {expr}" for expr in failures])

    return msg
