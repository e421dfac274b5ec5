"""Within-context and cross-context permutation of feature sequences.

A permutation never touches the manifest. It produces a :class:`PermutedView`:
for every manifest position ``i`` the view takes feature ``X_i`` from position
``source_index[i]`` and everything else (labels, tags, other modalities)
from ``i`` itself. Whole sequences move as one block.
"""

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from loguru import logger

from capfi.data.models import Manifest, Modality, Sample
from capfi.data.subsets import ContextSet
from capfi.utils.exceptions import EmptyContextError, PermutationError
from capfi.utils.rng import derive_rng

# Stored sample field each permutable feature lives in
_FEATURE_FIELDS = {
    Modality.BBOX: "bbox",
    Modality.POSE: "pose",
    Modality.LOCAL_CONTEXT: "local_context",
    Modality.SPEED: "speed",
    Modality.PROXIMITY_RATE: "distance",
}


def context_rows(manifest: Manifest, context: ContextSet) -> np.ndarray:
    """Manifest positions of a context's members, in manifest order."""
    return np.fromiter(
        (manifest.position(sample_id) for sample_id in context.members),
        dtype=np.int64,
        count=len(context.members),
    )


@dataclass(frozen=True)
class PermutationPlan:
    """Which feature to shuffle, inside which context, how many times."""

    feature: Modality
    context: ContextSet
    base_seed: int
    repetitions: Optional[int] = None
    unit: str = "sequence"

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature", Modality(self.feature))
        if self.repetitions is not None and self.repetitions < 1:
            raise PermutationError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.unit != "sequence":
            raise PermutationError(f"Unsupported permutation unit '{self.unit}'")

    @property
    def n_repetitions(self) -> int:
        """N; defaults to the context cardinality (at least one)."""
        if self.repetitions is not None:
            return self.repetitions
        return max(1, self.context.cardinality)


@dataclass(frozen=True)
class PermutedView:
    """A manifest seen through a feature reassignment."""

    manifest: Manifest
    feature: Modality
    source_index: np.ndarray
    rows: np.ndarray
    notation: str
    repetition: int = 0

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.source_index, np.arange(len(self.manifest))))

    @property
    def sources(self) -> np.ndarray:
        """Source position of the feature for each row of the view's context."""
        return self.source_index[self.rows]

    def digest_bytes(self) -> bytes:
        """Canonical bytes of the reassignment (for hashing)."""
        return self.sources.astype("<i8").tobytes()

    def sample(self, position: int) -> Sample:
        """The sample at ``position`` as the view sees it."""
        original = self.manifest.samples[position]
        source = int(self.source_index[position])
        if source == position:
            return original
        field = _FEATURE_FIELDS[self.feature]
        donor = self.manifest.samples[source]
        return original.model_copy(update={field: getattr(donor, field)})

    def materialize(self) -> Manifest:
        """A new Manifest with the reassignment applied."""
        return self.manifest.with_samples([self.sample(i) for i in range(len(self.manifest))])

    def inverse(self) -> "PermutedView":
        """View over :meth:`materialize` that undoes this reassignment.

        Raises:
            PermutationError: When the reassignment is not a bijection.
        """
        n = len(self.manifest)
        if not np.array_equal(np.sort(self.source_index), np.arange(n)):
            raise PermutationError("Only bijective reassignments can be inverted")
        inverse_index = np.empty(n, dtype=np.int64)
        inverse_index[self.source_index] = np.arange(n)
        return PermutedView(
            manifest=self.materialize(),
            feature=self.feature,
            source_index=inverse_index,
            rows=self.rows,
            notation=self.notation,
            repetition=self.repetition,
        )


def identity_view(
    manifest: Manifest,
    feature: Modality,
    context: ContextSet,
    rows: Optional[np.ndarray] = None,
) -> PermutedView:
    """A view that changes nothing, restricted to ``context``.

    ``rows`` may carry precomputed :func:`context_rows` of ``context``.
    """
    return PermutedView(
        manifest=manifest,
        feature=Modality(feature),
        source_index=np.arange(len(manifest), dtype=np.int64),
        rows=context_rows(manifest, context) if rows is None else rows,
        notation=context.notation,
    )


def permute_within_context(
    manifest: Manifest,
    plan: PermutationPlan,
    repetition: int,
    rows: Optional[np.ndarray] = None,
) -> PermutedView:
    """Shuffle ``plan.feature`` among the members of ``plan.context``.

    The shuffle is a uniform permutation seeded by
    ``(base_seed, context notation, feature, repetition)``; it does not depend
    on the oracle, on other contexts or on draw order.

    Raises:
        PermutationError: If ``repetition`` is outside ``[0, N)``.
    """
    if not 0 <= repetition < plan.n_repetitions:
        raise PermutationError(
            f"Repetition {repetition} outside [0, {plan.n_repetitions}) for {plan.context.notation}"
        )
    view = identity_view(manifest, plan.feature, plan.context, rows)
    rows = view.rows
    if len(rows) < 2:
        logger.warning(
            f"Context {plan.context.notation} has {len(rows)} member(s); "
            f"permutation of {plan.feature.value} is the identity"
        )
        return PermutedView(
            manifest=manifest,
            feature=plan.feature,
            source_index=view.source_index,
            rows=rows,
            notation=plan.context.notation,
            repetition=repetition,
        )

    rng = derive_rng(plan.base_seed, "within", plan.context.notation, plan.feature.value, repetition)
    order = rng.permutation(len(rows))
    source_index = view.source_index.copy()
    source_index[rows] = rows[order]
    return PermutedView(
        manifest=manifest,
        feature=plan.feature,
        source_index=source_index,
        rows=rows,
        notation=plan.context.notation,
        repetition=repetition,
    )


def cross_context_permute(
    manifest: Manifest,
    feature: Modality | str,
    source: ContextSet,
    donor: ContextSet,
    seed: int,
    draw: int = 0,
) -> PermutedView:
    """Give each source member the feature sequence of a random donor member.

    Donors are drawn uniformly with replacement from the original manifest;
    members of both sets are eligible donors and are replaced like any other
    source member.

    Raises:
        EmptyContextError: If the source or donor set is empty.
    """
    feature = Modality(feature)
    if donor.cardinality == 0:
        raise EmptyContextError(f"Donor context {donor.notation} is empty")
    if source.cardinality == 0:
        raise EmptyContextError(f"Source context {source.notation} is empty")

    rows = context_rows(manifest, source)
    donor_rows = context_rows(manifest, donor)
    rng = derive_rng(seed, "cross", source.notation, donor.notation, feature.value, draw)
    picks = rng.integers(0, len(donor_rows), size=len(rows))

    source_index = np.arange(len(manifest), dtype=np.int64)
    source_index[rows] = donor_rows[picks]
    return PermutedView(
        manifest=manifest,
        feature=feature,
        source_index=source_index,
        rows=rows,
        notation=f"{source.notation}<-{donor.notation}",
        repetition=draw,
    )


def permutation_digest(views: Iterable[PermutedView]) -> str:
    """SHA-256 over the reassignment arrays of a sequence of views."""
    digest = hashlib.sha256()
    for view in views:
        digest.update(view.digest_bytes())
    return digest.hexdigest()
