"""This module contains the parameter-count report and its reconciliation against the reference
counts of the synthetic-recipe models."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict

from pyvhrnn.models.model import build_model
from pyvhrnn.models.model_base import SequenceModel
from pyvhrnn.models.model_config import ModelConfig

REFERENCE_COUNTS: dict[tuple[str, int], int] = {
    ("vrnn", 4): 716,
    ("vrnn", 6): 1516,
    ("vrnn", 8): 2612,
    ("vhrnn", 4): 1568,
}
RECONCILE_TOLERANCE = 0.2
RECONCILE_MARGIN = 0.05


# pylint: disable=too-few-public-methods
class ReconcileStatuses:
    """Stores how a built count relates to the reconciliation tolerance."""

    OK = "ok"
    NEAR_LIMIT = "near_limit"
    OUTSIDE = "outside"


class LayerCount(BaseModel):
    """Parameter count of one layer.

    Attributes:
        layer (str): The layer name, e.g. enc.0 or omega.dec.mean.out.
        shapes (list[tuple[int, ...]]): The shapes of its tensors, in registration order.
        count (int): The number of scalars.
    """

    layer: str
    shapes: list[tuple[int, ...]]
    count: int

    model_config = ConfigDict(populate_by_name=True)


class Reconciliation(BaseModel):
    """Comparison of a built model with its reference count.

    Attributes:
        kind (str): The model kind.
        z_dim (int): The latent dimension.
        count (int): The built parameter count.
        reference (int): The reference count.
        deviation (float): (count − reference) / reference.
        layers (list[LayerCount]): The per-layer itemization.
    """

    kind: str
    z_dim: int
    count: int
    reference: int
    deviation: float
    layers: list[LayerCount]

    model_config = ConfigDict(populate_by_name=True)

    @property
    def within_tolerance(self) -> bool:
        return abs(self.deviation) <= RECONCILE_TOLERANCE

    @property
    def status(self) -> str:
        """ok, near_limit when less than RECONCILE_MARGIN inside the tolerance, or outside."""
        if not self.within_tolerance:
            return ReconcileStatuses.OUTSIDE
        if RECONCILE_TOLERANCE - abs(self.deviation) < RECONCILE_MARGIN:
            return ReconcileStatuses.NEAR_LIMIT
        return ReconcileStatuses.OK

    def note(self) -> str | None:
        """Explains a count which is not plainly within the tolerance, None otherwise."""
        if self.status == ReconcileStatuses.OK:
            return None
        side = "below" if self.deviation < 0 else "above"
        if self.status == ReconcileStatuses.OUTSIDE:
            return (
                f"{self.kind} z={self.z_dim}: {self.count} is {abs(self.deviation):.1%} {side} "
                f"the reference {self.reference}, outside the {RECONCILE_TOLERANCE:.0%} tolerance"
            )
        headroom = RECONCILE_TOLERANCE - abs(self.deviation)
        return (
            f"{self.kind} z={self.z_dim}: {self.count} is {abs(self.deviation):.1%} {side} the "
            f"reference {self.reference}, only {headroom:.1%} inside the "
            f"{RECONCILE_TOLERANCE:.0%} tolerance; the per-layer rows itemize the built layers"
        )


def layer_of(name: str) -> str:
    """Strips the tensor suffix (W, U, b, b_rec, ...) from a parameter name."""
    return name.rsplit(".", 1)[0]


def param_report(model: SequenceModel) -> list[LayerCount]:
    """Itemizes the parameter count per layer, in registration order.

    Arguments:
        model (SequenceModel): The model.

    Returns:
        list[LayerCount]: One entry per layer.
    """
    grouped: dict[str, list[tuple[int, ...]]] = {}
    for name, value in model.params.items():
        grouped.setdefault(layer_of(name), []).append(tuple(value.shape))
    report = []
    for layer, shapes in grouped.items():
        count = 0
        for shape in shapes:
            size = 1
            for dim in shape:
                size *= dim
            count += size
        report.append(LayerCount(layer=layer, shapes=shapes, count=count))
    return report


def reconcile_reference_counts(seed: int = 0) -> list[Reconciliation]:
    """Builds the synthetic-recipe VRNN (z = 4, 6, 8) and VHRNN (z = 4) and compares their counts
    with the reference counts 716, 1516, 2612 and 1568.

    Arguments:
        seed (int): The initialization seed, counts don't depend on it.

    Returns:
        list[Reconciliation]: One entry per configuration.
    """
    rows = []
    for (kind, z_dim), reference in REFERENCE_COUNTS.items():
        model = build_model(ModelConfig(kind=kind, z_dim=z_dim, x_dim=2), seed)
        layers = param_report(model)
        count = sum(layer.count for layer in layers)
        rows.append(
            Reconciliation(
                kind=kind,
                z_dim=z_dim,
                count=count,
                reference=reference,
                deviation=(count - reference) / reference,
                layers=layers,
            )
        )
    return rows
