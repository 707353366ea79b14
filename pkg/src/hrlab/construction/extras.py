"""Several forms at once, and products of certified sets."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from hrlab.config import Budget
from hrlab.errors import HypothesisError
from hrlab.forms import LinearForm, render, subset_sums
from hrlab.images import ModuleSubset, image, is_surjective
from hrlab.modules import Element, FiniteModule


@dataclass(frozen=True)
class ManyForms:
    phis: tuple[LinearForm, ...]
    chi: LinearForm

    @property
    def zero_notin_chi(self) -> bool:
        return not subset_sums(self.chi).contains_zero

    def offset(self, k: int, M: FiniteModule, a_star: Element) -> Element:
        """``sum_{k' != k} Phi_{k'}(a*, ..., a*)``."""
        total = sum(p.total for j, p in enumerate(self.phis) if j != k)
        return M.scalar_mul(total, a_star)

    def embed(self, k: int, A: ModuleSubset, a_star: Element,
              budget: Budget | None = None) -> tuple[ModuleSubset, ModuleSubset]:
        """``Phi_k(A)`` translated by :meth:`offset`, together with ``chi(A)``.

        The translate is a subset of ``chi(A)`` (fill every other block of
        variables with ``a*``), so ``|Phi_k(A)| <= |chi(A)|``.
        """
        if a_star not in A:
            raise ValueError(f"{a_star} is not in A")
        M = A.parent
        off = self.offset(k, M, a_star)
        shifted = ModuleSubset.from_elements(
            M, (M.add(w, off) for w in image(self.phis[k], A, budget)), budget
        )
        return shifted, image(self.chi, A, budget)


def many_forms(phis: Sequence[LinearForm]) -> ManyForms:
    """Concatenate the variable blocks of ``phis`` into one form ``chi``."""
    if not phis:
        raise ValueError("at least one form is required")
    return ManyForms(tuple(phis), LinearForm(tuple(c for p in phis for c in p.coeffs)))


@dataclass(frozen=True)
class CertifiedSet:
    """``A ⊆ Z/m`` with ``Upsilon(A) = Z/m`` and ``|Phi(A)| < eps * m``."""

    m: int
    members: frozenset[int]
    eps: Fraction


def certify(upsilon: LinearForm, phi: LinearForm, m: int, members: Iterable[int],
            eps: Fraction, budget: Budget | None = None) -> CertifiedSet:
    members = frozenset(int(a) % m for a in members)
    eps = Fraction(eps)
    if not members:
        raise HypothesisError("the empty set is never certified")
    if m == 1:
        if eps <= 1:
            raise HypothesisError("the trivial module needs eps > 1")
        return CertifiedSet(1, frozenset({0}), eps)
    M = FiniteModule.cyclic(m)
    A = ModuleSubset.from_elements(M, [(a,) for a in members], budget)
    if not is_surjective(upsilon, A, budget=budget):
        raise HypothesisError(f"{render(upsilon)} is not onto Z/{m} on this set")
    size = len(image(phi, A, budget))
    if not size < eps * m:
        raise HypothesisError(f"|{render(phi)}(A)| = {size} is not below {eps} * {m}")
    return CertifiedSet(m, members, eps)


@dataclass(frozen=True)
class Composition:
    module: FiniteModule | None
    A: ModuleSubset | None
    eps: Fraction
    image_size: int
    product_image: bool
    surjective: bool
    bound_holds: bool


def compose(parts: Sequence[CertifiedSet], upsilon: LinearForm, phi: LinearForm,
            budget: Budget | None = None) -> Composition:
    """Product of certified sets in the direct sum of their modules.

    Summands with ``m = 1`` are dropped.  The image of the product is
    compared with the product of the images, and the bound with the
    product of the ``eps`` values.
    """
    eps = Fraction(1)
    for p in parts:
        eps *= p.eps
    kept = [p for p in parts if p.m > 1]
    if not kept:
        return Composition(None, None, eps, 1, True, True, 1 < eps)
    M = FiniteModule(tuple(p.m for p in kept))
    A = ModuleSubset.from_elements(M, product(*[sorted(p.members) for p in kept]), budget)
    img = image(phi, A, budget)
    per_part = []
    for p in kept:
        Mi = FiniteModule.cyclic(p.m)
        Ai = ModuleSubset.from_elements(Mi, [(a,) for a in p.members], budget)
        per_part.append(sorted(w[0] for w in image(phi, Ai, budget)))
    expected = frozenset(product(*per_part))
    return Composition(
        module=M,
        A=A,
        eps=eps,
        image_size=len(img),
        product_image=img.elements() == expected,
        surjective=is_surjective(upsilon, A, budget=budget),
        bound_holds=len(img) < eps * M.order,
    )
