"""Follow one generated session from raw speech acts to fuzzy profile indices.

Run with ``python demos/profile_walkthrough.py``.
"""
from collections import Counter

from learnerprofiles.acts import tally_acts
from learnerprofiles.coefficients import session_coefficients
from learnerprofiles.fsm import generate_session, validate_session
from learnerprofiles.fuzzy import INDEX_NAMES, evaluate_learner

roster = ("ana", "ben", "chloe", "dev")
mix = {"ana": "organizer", "ben": "verifier", "chloe": "seeker", "dev": "independent"}
log = generate_session(seed=7, roster=roster, leader="ana", archetype_mix=mix)

print(f"session {log.session_id}: {len(log.records)} speech acts, leader {log.leader}")
for rec in log.records[:12]:
    reply = f" -> #{rec.reply_to}" if rec.reply_to else ""
    print(f"  #{rec.seq:<3} {rec.actor:<6} {rec.act.value}{reply}")
print("  ...")

report = validate_session(log)
print(f"\nprotocol check: final state {report.final_state.value}, {len(report.findings)} findings")

# Each learner's acts are sorted through the hybrid grid into interventions
# and the reactions they drew from peers.
print("\nact tallies")
for learner in roster:
    counts = tally_acts(log, learner)
    acts = Counter(r.act.value for r in log.records if r.actor == learner)
    print(f"  {learner:<6} ({mix[learner]:<11}) total {counts.total:>2}  acts {dict(sorted(acts.items()))}")

coeffs = session_coefficients(log)
print("\ncoefficients (own-archetype intervention and reaction, participation ratio)")
for learner in roster:
    c = coeffs[learner]
    arch = mix[learner]
    print(f"  {learner:<6} int {c.coef_int[arch]:.2f}  reac {c.coef_reac[arch]:.2f}  IR {c.ir:.2f}"
          f"  orientation {c.ind_ort:.2f}  decision {c.ind_dec:.2f}")

print("\nfuzzy profile indices on [0, 12]")
print("  " + " " * 8 + "".join(f"{name:>14}" for name in INDEX_NAMES))
for learner in roster:
    vec = evaluate_learner(coeffs[learner])
    print(f"  {learner:<8}" + "".join(f"{v:>14.2f}" for v in vec.as_array()))

vec = evaluate_learner(coeffs["ana"])
top = max(vec.percentages["organizer"].items(), key=lambda kv: kv[1])
print(f"\nana's organizer output leans {top[0]} ({top[1]:.0%} of the normalized rule strength)")
