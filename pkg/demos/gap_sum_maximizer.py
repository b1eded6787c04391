#!/usr/bin/env python3
"""The spectral-gap trick behind the controlled-measurement bound.

Over all unitaries U, the spectral width of M1 + U M2 U^+ tops out at the sum
of the two individual widths, and the maximizer simply aligns the sorted
eigenbases.  The script builds the maximizer for random pairs, then lets a
crowd of random unitaries try (and fail) to beat it.
"""

import numpy as np

from hamest import lemma1_maximizer, random_hermitian, random_unitary, spectral_gap


def main():
    rng = np.random.default_rng(7)
    print(f"{'dim':>4} {'gap sum':>10} {'constructed':>12} {'best random':>12}")
    for dim in (2, 3, 4, 6):
        m1 = random_hermitian(dim, rng)
        m2 = random_hermitian(dim, rng)
        u_star, value = lemma1_maximizer(m1, m2)
        achieved = spectral_gap(m1 + u_star @ m2 @ u_star.conj().T)
        best = max(
            spectral_gap(m1 + (v := random_unitary(dim, rng)) @ m2 @ v.conj().T)
            for _ in range(2000)
        )
        print(f"{dim:4d} {value:10.5f} {achieved:12.5f} {best:12.5f}")
    print("\n2000 random tries per row never beat the aligned-eigenbasis value.")


if __name__ == "__main__":
    main()
