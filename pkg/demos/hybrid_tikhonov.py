"""Tikhonov regularization with a learned surrogate term."""
# %%
from invreg import harness as h

res, table = h.run_hybrid_comparison(h.ExperimentConfig("hybrid", {}))
print(",".join(table.columns))
for row in table.rows:
    print(",".join(f"{v:.3e}" for v in row))
print(f"plain exponent {res['plain_exponent']:.3f}, hybrid exponent {res['hybrid_exponent']:.3f}")
print("inside the sanity envelope" if res["envelope_ok"] else "outside the sanity envelope")
