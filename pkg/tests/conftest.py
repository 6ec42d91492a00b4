"""Shared pytest hooks: per-criterion summary lines for the acceptance suite."""

ACCEPTANCE_CRITERIA = (
    ("hyperedge rates match the exhaustive pair sum",
     ("test_rate_fast_path_matches_exhaustive_sum",)),
    ("containment counts match subset enumeration",
     ("test_containment_counts_match_subset_enumeration",)),
    ("EM objective monotone, analytic fixed points stable",
     ("test_em_objective_monotone_on_random_instances",
      "test_analytic_fixed_points_survive_a_sweep")),
    ("hand-derived scalar updates reproduced",
     ("test_scalar_updates_match_hand_values",)),
    ("planted communities recovered, layer coupling matters",
     ("test_planted_recovery_strong_signal",
      "test_removing_inter_edges_lowers_f1_at_weak_signal")),
    ("disassortative affinities recovered",
     ("test_disassortative_fit_puts_mass_off_diagonal",
      "test_assortative_init_scores_lower_on_disassortative_data")),
    ("contact datasets reproduce reported score ranges",
     ("test_workplace_hyperedge_auc",
      "test_highschool_hyperedge_auc",
      "test_hospital_membership_cosine")),
    ("ranking and clustering metrics match oracles",
     ("test_auc_matches_bruteforce_counting",
      "test_clustering_metrics_match_oracles",
      "test_auc_complement_identity")),
    ("sampled hyperedge counts match model rates",
     ("test_sampler_counts_match_rates",)),
    ("thousand-node fit reaches a finite monotone objective",
     ("test_large_sparse_fit_smoke",)),
)

_RANK = {"passed": 0, "skipped": 1, "error": 2, "failed": 3}


def _skip_reason(report):
    longrepr = getattr(report, "longrepr", None)
    if isinstance(longrepr, tuple) and len(longrepr) == 3:
        reason = str(longrepr[2])
        return reason[len("Skipped: "):] if reason.startswith("Skipped: ") else reason
    return ""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    stats = terminalreporter.stats
    status = {}
    reasons = {}
    for category in ("passed", "failed", "error", "skipped"):
        for report in stats.get(category, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1].split("[")[0]
            if _RANK[category] >= _RANK.get(status.get(name, "passed"), -1):
                status[name] = category
            if category == "skipped" and name not in reasons:
                reasons[name] = _skip_reason(report)
    if not status:
        return
    terminalreporter.section("acceptance criteria")
    for number, (label, tests) in enumerate(ACCEPTANCE_CRITERIA, start=1):
        seen = [status[t] for t in tests if t in status]
        if not seen:
            continue
        if any(s in ("failed", "error") for s in seen):
            verdict = "FAIL"
        elif all(s == "skipped" for s in seen):
            note = next((reasons[t] for t in tests if reasons.get(t)), "")
            verdict = f"SKIP ({note})" if note else "SKIP"
        else:
            skipped = sum(s == "skipped" for s in seen)
            verdict = "PASS" if not skipped else f"PASS ({skipped} part(s) skipped)"
        terminalreporter.write_line(f"criterion {number:>2}: {label}: {verdict}")
