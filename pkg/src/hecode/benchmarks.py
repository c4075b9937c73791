"""Built-in test problems.

``example1`` and ``example2`` are the one-dimensional toy problems used to
illustrate the enlarged Pareto set and the wide infeasible gap. ``g06``,
``g08``, ``g11`` and ``g24`` come from the CEC2006 constrained suite
(Liang et al., 2006 technical report). All functions here take an
``(n, D)`` batch.
"""
import numpy as np

from .problems import ConstrainedProblem, register


def sinpi(t):
    """sin(pi * t) with exact zeros at integer t."""
    t = np.asarray(t, dtype=float)
    n = np.round(t)
    # (-1)^n, from n mod 2 in {0, 1}
    return (1.0 - 2.0 * np.mod(n, 2.0)) * np.sin(np.pi * (t - n))


def _example1():
    return ConstrainedProblem(
        name="example1",
        lower=[-1000.0],
        upper=[1000.0],
        objective=lambda X: X[:, 0],
        # sin(x pi / 1200) >= 0
        inequalities=(lambda X: -sinpi(X[:, 0] / 1200.0),),
        f_star=0.0,
        x_star=[0.0],
        vectorized=True,
        description="min x on [-1000, 1000] s.t. sin(x*pi/1200) >= 0",
    )


def _example2():
    return ConstrainedProblem(
        name="example2",
        lower=[-500.0],
        upper=[3000.0],
        objective=lambda X: X[:, 0],
        # sin(x pi / 1000) >= 0; feasible set [0, 1000] U [2000, 3000]
        inequalities=(lambda X: -sinpi(X[:, 0] / 1000.0),),
        f_star=0.0,
        x_star=[0.0],
        vectorized=True,
        description="min x on [-500, 3000] s.t. sin(x*pi/1000) >= 0 (wide gap)",
    )


def _g06():
    return ConstrainedProblem(
        name="g06",
        lower=[13.0, 0.0],
        upper=[100.0, 100.0],
        objective=lambda X: (X[:, 0] - 10.0) ** 3 + (X[:, 1] - 20.0) ** 3,
        inequalities=(
            lambda X: -(X[:, 0] - 5.0) ** 2 - (X[:, 1] - 5.0) ** 2 + 100.0,
            lambda X: (X[:, 0] - 6.0) ** 2 + (X[:, 1] - 5.0) ** 2 - 82.81,
        ),
        f_star=-6961.8138755802,
        x_star=[14.09500000000000064, 0.8429607892154795668],
        vectorized=True,
        description="CEC2006 g06, cubic, 2 inequality constraints",
    )


def _g08_objective(X):
    x1, x2 = X[:, 0], X[:, 1]
    # x1 = 0 gives 0/0; evaluate_batch reports the NaN as an EvaluationError
    with np.errstate(divide="ignore", invalid="ignore"):
        return -(np.sin(2 * np.pi * x1) ** 3) * np.sin(2 * np.pi * x2) / (x1**3 * (x1 + x2))


def _g08():
    return ConstrainedProblem(
        name="g08",
        lower=[0.0, 0.0],
        upper=[10.0, 10.0],
        objective=_g08_objective,
        inequalities=(
            lambda X: X[:, 0] ** 2 - X[:, 1] + 1.0,
            lambda X: 1.0 - X[:, 0] + (X[:, 1] - 4.0) ** 2,
        ),
        f_star=-0.0958250414,
        x_star=[1.22797135260752599, 4.24537336612274885],
        vectorized=True,
        description="CEC2006 g08, nonlinear, 2 inequality constraints",
    )


def _g11():
    return ConstrainedProblem(
        name="g11",
        lower=[-1.0, -1.0],
        upper=[1.0, 1.0],
        objective=lambda X: X[:, 0] ** 2 + (X[:, 1] - 1.0) ** 2,
        equalities=(lambda X: X[:, 1] - X[:, 0] ** 2,),
        f_star=0.7499,
        x_star=[-0.707036070037170616, 0.500000004333606807],
        vectorized=True,
        description="CEC2006 g11, quadratic, 1 equality constraint",
    )


def _g24():
    def g1(X):
        x1, x2 = X[:, 0], X[:, 1]
        return -2 * x1**4 + 8 * x1**3 - 8 * x1**2 + x2 - 2

    def g2(X):
        x1, x2 = X[:, 0], X[:, 1]
        return -4 * x1**4 + 32 * x1**3 - 88 * x1**2 + 96 * x1 + x2 - 36

    return ConstrainedProblem(
        name="g24",
        lower=[0.0, 0.0],
        upper=[3.0, 4.0],
        objective=lambda X: -X[:, 0] - X[:, 1],
        inequalities=(g1, g2),
        f_star=-5.5080132716,
        # x2 pulled 1e-12 inside so both active constraints evaluate <= 0
        x_star=[2.32952019747762, 3.178493074116],
        vectorized=True,
        description="CEC2006 g24, linear objective, 2 inequality constraints",
    )


BUILTINS = {p.name: p for p in (_example1(), _example2(), _g06(), _g08(), _g11(), _g24())}

for _p in BUILTINS.values():
    register(_p, replace=True)


def builtin_problems() -> dict:
    return dict(BUILTINS)
