"""Published reference errors for the nine benchmark tables.

Tables 1-3 and 5-8 are temporal studies (fixed M=1000, N = 4..32), tables 4
and 9 spatial studies (fixed N=500, M = 4..32). Each entry stores, for
every gamma column, the E1 values and the reported orders (None where no
order is defined).
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class RefColumn:
    gamma: object          # config gamma entry: number, "opt" or "c/alpha"
    E1: tuple
    orders: tuple
    theoretical: float


@dataclass(frozen=True)
class RefTable:
    number: int
    kind: str
    alpha: float
    direction: str         # "temporal" | "spatial"
    N: tuple
    M: tuple
    columns: tuple

    @property
    def sweep(self):
        return self.N if self.direction == "temporal" else self.M


_NT = (4, 8, 16, 32)
_X = None

TABLES = {
    1: RefTable(1, "subdiffusion", 0.5, "temporal", _NT, (1000,), (
        RefColumn(1, (1.6124e-01, 1.1090e-01, 7.5477e-02, 5.0612e-02), (_X, 0.54, 0.56, 0.58), 0.50),
        RefColumn("opt", (4.4642e-02, 1.2036e-02, 3.1256e-03, 8.0038e-04), (_X, 1.89, 1.95, 1.97), 2.0),
        RefColumn("2.5/alpha", (6.4526e-02, 1.8154e-02, 4.7969e-03, 1.2989e-03), (_X, 1.83, 1.92, 1.88), 2.0),
    )),
    2: RefTable(2, "subdiffusion", 0.7, "temporal", _NT, (1000,), (
        RefColumn(1, (1.0592e-01, 6.1506e-02, 3.4534e-02, 1.8403e-02), (_X, 0.78, 0.83, 0.91), 0.70),
        RefColumn("opt", (2.5978e-02, 6.5510e-03, 1.6656e-03, 4.2368e-04), (_X, 1.99, 1.98, 1.98), 2.0),
        RefColumn("2.5/alpha", (3.8595e-02, 1.0043e-02, 2.5747e-03, 6.5520e-04), (_X, 1.94, 1.96, 1.97), 2.0),
    )),
    3: RefTable(3, "subdiffusion", 0.9, "temporal", _NT, (1000,), (
        RefColumn(1, (3.4213e-02, 1.6299e-02, 7.0935e-03, 2.6405e-03), (_X, 1.07, 1.20, 1.43), 0.90),
        RefColumn("opt", (8.0750e-03, 1.8998e-03, 4.7949e-04, 1.2448e-04), (_X, 2.09, 1.99, 1.95), 2.0),
        RefColumn("2.5/alpha", (1.2235e-02, 2.9302e-03, 7.4266e-04, 1.9062e-04), (_X, 2.06, 1.98, 1.96), 2.0),
    )),
    4: RefTable(4, "subdiffusion", 0.7, "spatial", (500,), _NT, (
        RefColumn(1, (3.6943e-01, 9.1710e-02, 2.2891e-02, 5.7205e-03), (_X, 2.01, 2.00, 2.00), 2.0),
        RefColumn("opt", (3.6942e-01, 9.1710e-02, 2.2891e-02, 5.7213e-03), (_X, 2.01, 2.00, 2.00), 2.0),
        RefColumn("2.5/alpha", (3.6931e-01, 9.1666e-02, 2.2864e-02, 5.6977e-03), (_X, 2.01, 2.00, 2.00), 2.0),
    )),
    5: RefTable(5, "diffusionwave", 1.01, "temporal", _NT, (1000,), (
        RefColumn(1, (1.2885e-02, 1.1231e-02, 9.2424e-03, 6.9173e-03), (_X, 0.66, 0.28, 0.42), 0.505),
        RefColumn("opt", (4.7702e-03, 1.5632e-03, 4.2372e-04, 1.0616e-04), (_X, 1.85, 1.88, 2.00), 2.0),
        RefColumn("4.5/alpha", (4.7959e-03, 1.4205e-03, 4.0423e-04, 1.0064e-04), (_X, 1.76, 1.81, 2.01), 2.0),
    )),
    6: RefTable(6, "diffusionwave", 1.1, "temporal", _NT, (1000,), (
        RefColumn(1, (2.4901e-02, 1.5761e-02, 1.0245e-02, 6.3732e-03), (_X, 0.66, 0.62, 0.68), 0.55),
        RefColumn("opt", (1.6750e-02, 4.6593e-03, 1.2195e-03, 3.0860e-04), (_X, 1.85, 1.93, 1.98), 2.0),
        RefColumn("4.5/alpha", (2.0056e-02, 5.7785e-03, 1.5306e-03, 3.9009e-04), (_X, 1.80, 1.92, 1.97), 2.0),
    )),
    7: RefTable(7, "diffusionwave", 1.5, "temporal", _NT, (1000,), (
        RefColumn(1, (5.3444e-02, 1.7243e-02, 6.1521e-03, 2.3596e-03), (_X, 1.63, 1.49, 1.38), 0.75),
        RefColumn("opt", (7.8413e-02, 2.0766e-02, 5.3057e-03, 1.3373e-03), (_X, 1.92, 1.97, 1.99), 2.0),
        RefColumn("4.5/alpha", (9.6727e-02, 2.5910e-02, 6.6772e-03, 1.6881e-03), (_X, 1.90, 1.96, 1.98), 2.0),
    )),
    8: RefTable(8, "diffusionwave", 1.9, "temporal", _NT, (1000,), (
        RefColumn(1, (6.1480e-02, 1.6140e-02, 4.1813e-03, 1.1127e-03), (_X, 1.93, 1.95, 1.91), 0.95),
        RefColumn("opt", (1.3149e-01, 3.0479e-02, 7.8883e-03, 2.0132e-03), (_X, 2.11, 1.95, 1.97), 2.0),
        RefColumn("4.5/alpha", (1.6643e-01, 3.8947e-02, 9.9179e-03, 2.5274e-03), (_X, 2.10, 1.97, 1.97), 2.0),
    )),
    9: RefTable(9, "diffusionwave", 1.5, "spatial", (500,), _NT, (
        RefColumn(1, (2.4719e-01, 6.1357e-02, 1.5313e-02, 3.8262e-03), (_X, 2.01, 2.00, 2.00), 2.0),
        RefColumn("opt", (2.4718e-01, 6.1352e-02, 1.5309e-02, 3.8214e-03), (_X, 2.01, 2.00, 2.00), 2.0),
        RefColumn("4.5/alpha", (2.4718e-01, 6.1349e-02, 1.5306e-02, 3.8190e-03), (_X, 2.01, 2.00, 2.00), 2.0),
    )),
}


def table(number: int) -> RefTable:
    try:
        return TABLES[int(number)]
    except KeyError:
        raise KeyError(f"no reference table {number}; choose 1..9") from None


def config_dict(number: int, M_temporal: int = 400, Ns=None) -> dict:
    """An ExperimentConfig dictionary regenerating the given table."""
    t = table(number)
    return {
        "name": f"table{t.number}",
        "kind": t.kind,
        "alphas": [t.alpha],
        "gammas": [c.gamma for c in t.columns],
        "N": list(Ns or t.N),
        "M": [M_temporal] if t.direction == "temporal" else list(t.M),
    }
