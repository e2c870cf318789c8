from fractions import Fraction
from itertools import product
import logging
import math

import numpy as np

from ..schema.errors import (
    BaseRateOrientationError,
    GridTooLargeError,
    UtilityUnachievableError,
)
from ..schema.polygon import FeasiblePolygon, FrontierSummary, Point, SwapType
from ..schema.population import CellClassifier, GroupTally
from .population import check_population, relabel_groups

logger = logging.getLogger(__name__)

DEFAULT_GRID_CAP = 1_000_000
CONTAINMENT_TOLERANCE = 1e-9

ExactPoint = tuple[Fraction, Fraction]


def feasible_polygon(tally: GroupTally, lam: float) -> FeasiblePolygon:
    """
    The metric map is affine in the four cell fractions, so the feasible region is
    the convex hull of the images of the 16 corners of the unit cube.
    """
    check_population(tally)
    corners = [
        _exact_image(tally, Fraction(lam), fractions)
        for fractions in product((0, 1), repeat=4)
    ]
    hull = convex_hull(corners)
    logger.debug(f"Hull of {len(corners)} cube images has {len(hull)} vertices")
    return FeasiblePolygon(
        vertices=[(float(delta), float(utility)) for delta, utility in hull],
        lam=lam,
    )


def convex_hull(points: list[ExactPoint]) -> list[ExactPoint]:
    """Monotone chain hull, counterclockwise, collinear points dropped."""
    unique = sorted(set(points))
    if len(unique) <= 2:
        return unique

    def half_hull(ordered: list[ExactPoint]) -> list[ExactPoint]:
        chain: list[ExactPoint] = []
        for point in ordered:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], point) <= 0:
                chain.pop()
            chain.append(point)
        return chain

    lower = half_hull(unique)
    upper = half_hull(list(reversed(unique)))
    return lower[:-1] + upper[:-1]


def contains(
    polygon: FeasiblePolygon, point: Point, tol: float = CONTAINMENT_TOLERANCE
) -> bool:
    return bool(contains_points(polygon, np.array([point], dtype=float), tol)[0])


def contains_points(
    polygon: FeasiblePolygon, points: np.ndarray, tol: float = CONTAINMENT_TOLERANCE
) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    vertices = np.array(polygon.vertices, dtype=float)

    if len(vertices) == 1:
        return np.hypot(*(points - vertices[0]).T) <= tol
    if len(vertices) == 2:
        return _distance_to_segment(points, vertices[0], vertices[1]) <= tol

    inside = np.ones(len(points), dtype=bool)
    for start, end in zip(vertices, np.roll(vertices, -1, axis=0)):
        edge = end - start
        offset = points - start
        signed_distance = (edge[0] * offset[:, 1] - edge[1] * offset[:, 0]) / np.hypot(
            *edge
        )
        inside &= signed_distance >= -tol
    return inside


def deterministic_grid(
    tally: GroupTally, lam: float, cap: int = DEFAULT_GRID_CAP
) -> np.ndarray:
    """
    (delta, utility) of every deterministic classifier, i.e. every integer count of
    selected people per cell. Returns an (m, 2) array.
    """
    check_population(tally)
    required = math.prod(count + 1 for count in tally.as_tuple())
    if required > cap:
        raise GridTooLargeError(required, cap)

    k_1_pos, k_1_neg, k_2_pos, k_2_neg = np.ix_(
        *(np.arange(count + 1, dtype=float) for count in tally.as_tuple())
    )
    delta = (k_1_pos + k_1_neg) / tally.n_1 - (k_2_pos + k_2_neg) / tally.n_2
    utility = (k_1_pos + k_2_pos) / tally.n_pos - lam * (k_1_neg + k_2_neg) / tally.n_neg
    delta, utility = np.broadcast_arrays(delta, utility)
    logger.info(f"Enumerated {required} deterministic classifiers")
    return np.column_stack((delta.ravel(), utility.ravel()))


def utility_threshold(tally: GroupTally, lam: float) -> FrontierSummary:
    """
    The utility above which no zero-disparity alternative of equal utility exists.
    Below it, the zero-disparity optimum h^f is such an alternative.
    """
    delta_star, min_ratio, swap = _frontier_terms(tally, Fraction(lam))
    repair = zero_disparity_repair(tally, lam)
    u_star = 1 - min_ratio * delta_star
    logger.info(
        f"Threshold: delta* = {float(delta_star)}, min ratio = {float(min_ratio)}, "
        f"U* = {float(u_star)}"
    )
    return FrontierSummary(
        delta_star=float(delta_star),
        u_star=float(u_star),
        u_f=float(u_star),
        min_ratio=float(min_ratio),
        swap=swap,
        repair=repair,
        lam=lam,
    )


def zero_disparity_repair(tally: GroupTally, lam: float) -> CellClassifier:
    """
    Start from the perfect classifier and apply the cheaper swap until the group
    selection rates meet: either deselect group-1 positives (utility cost n_1/n_+
    per unit of disparity) or select group-2 negatives (cost lam * n_2/n_-).
    """
    _, _, swap = _frontier_terms(tally, Fraction(lam))
    if swap is None:
        return CellClassifier.perfect()

    br_1 = Fraction(tally.n_1_pos, tally.n_1)
    br_2 = Fraction(tally.n_2_pos, tally.n_2)
    if swap is SwapType.SELECT_GROUP_2_NEGATIVES:
        p_2_neg = (tally.n_2 * br_1 - tally.n_2_pos) / tally.n_2_neg
        return CellClassifier.of((1.0, 0.0, 1.0, float(p_2_neg)))

    p_1_pos = tally.n_1 * br_2 / tally.n_1_pos
    return CellClassifier.of((float(p_1_pos), 0.0, 1.0, 0.0))


def min_disparity_at_utility(tally: GroupTally, lam: float, u0: float) -> float:
    """
    Smallest absolute disparity of any classifier with utility >= u0: zero up to the
    threshold, then linear along the efficient segment from (0, u_f) to (delta*, 1).
    """
    if u0 > 1:
        raise UtilityUnachievableError(u0)
    delta_star, min_ratio, _ = _frontier_terms(tally, Fraction(lam))
    u_f = 1 - min_ratio * delta_star
    target = Fraction(u0)
    if target <= u_f:
        return 0.0
    return float((target - u_f) / min_ratio)


def orient(tally: GroupTally) -> tuple[GroupTally, bool]:
    """The tally with the higher base rate in group 1, and whether the groups were swapped."""
    check_population(tally)
    if tally.n_1_pos * tally.n_2 < tally.n_2_pos * tally.n_1:
        logger.info("Group 2 has the higher base rate; relabeling groups")
        return relabel_groups(tally), True
    return tally, False


def pareto_frontier(tally: GroupTally, lam: float) -> tuple[Point, Point]:
    """Endpoints of the efficient segment: the zero-disparity optimum and h*."""
    summary = utility_threshold(tally, lam)
    return (0.0, summary.u_f), (summary.delta_star, 1.0)


def _frontier_terms(
    tally: GroupTally, lam: Fraction
) -> tuple[Fraction, Fraction, SwapType | None]:
    check_population(tally)
    br_1 = Fraction(tally.n_1_pos, tally.n_1)
    br_2 = Fraction(tally.n_2_pos, tally.n_2)
    if br_1 < br_2:
        raise BaseRateOrientationError(float(br_1), float(br_2))

    ratio_a = Fraction(tally.n_1, tally.n_pos)
    ratio_d = lam * Fraction(tally.n_2, tally.n_neg)
    delta_star = br_1 - br_2
    if delta_star == 0:
        return delta_star, min(ratio_a, ratio_d), None
    if ratio_d <= ratio_a:
        return delta_star, ratio_d, SwapType.SELECT_GROUP_2_NEGATIVES
    return delta_star, ratio_a, SwapType.DESELECT_GROUP_1_POSITIVES


def _exact_image(
    tally: GroupTally, lam: Fraction, fractions: tuple[int, ...]
) -> ExactPoint:
    p_1_pos, p_1_neg, p_2_pos, p_2_neg = fractions
    delta = Fraction(p_1_pos * tally.n_1_pos + p_1_neg * tally.n_1_neg, tally.n_1) - (
        Fraction(p_2_pos * tally.n_2_pos + p_2_neg * tally.n_2_neg, tally.n_2)
    )
    utility = Fraction(
        p_1_pos * tally.n_1_pos + p_2_pos * tally.n_2_pos, tally.n_pos
    ) - lam * Fraction(p_1_neg * tally.n_1_neg + p_2_neg * tally.n_2_neg, tally.n_neg)
    return delta, utility


def _cross(origin: ExactPoint, a: ExactPoint, b: ExactPoint) -> Fraction:
    return (a[0] - origin[0]) * (b[1] - origin[1]) - (a[1] - origin[1]) * (
        b[0] - origin[0]
    )


def _distance_to_segment(points: np.ndarray, start: np.ndarray, end: np.ndarray):
    edge = end - start
    t = np.clip(((points - start) @ edge) / (edge @ edge), 0.0, 1.0)
    closest = start + t[:, None] * edge
    return np.hypot(*(points - closest).T)

