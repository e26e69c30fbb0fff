#!/usr/bin/env python3
"""Generates the synthetic fixtures used by the test and acceptance suites.

Deterministic: fixed seeds throughout. Rerunning reproduces identical files.
Run from the repository root:  python3 tests/oracle/gen_fixtures.py
"""
import json
import os
import sys

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.normpath(os.path.join(HERE, "..", "fixtures"))
RUBRIC = os.path.normpath(os.path.join(HERE, "..", "..", "data", "rubric", "wai_o_s.en.json"))

QUESTIONS = [f"Q{i}" for i in range(1, 13)]


def reverse_questions():
    rubric = json.load(open(RUBRIC, encoding="utf-8"))
    return {q["id"] for q in rubric["questions"] if q["polarity"] == "reverse"}


REVERSE = reverse_questions()


def write_jsonl(path, records):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


COUNSELOR_LINES = [
    "How have you been since we last talked?",
    "What would you like to focus on today?",
    "It sounds like that situation kept weighing on you this week.",
    "What do you think made that moment easier to handle?",
    "Shall we try the breathing exercise we discussed before?",
    "I hear how much effort you are putting into this.",
]
CLIENT_LINES = [
    "This week was a bit calmer than the last one.",
    "I still get anxious before meetings, but I tried writing down my thoughts.",
    "I am not sure the homework helped, honestly.",
    "Talking it through here does make it feel more manageable.",
    "I managed to call my sister like we planned.",
    "Some days I just feel stuck again.",
]


def make_utterances(rng, n):
    utterances = []
    for i in range(n):
        if i % 2 == 0:
            text = COUNSELOR_LINES[rng.integers(0, len(COUNSELOR_LINES))]
            utterances.append({"speaker": "counselor", "text": text})
        else:
            text = CLIENT_LINES[rng.integers(0, len(CLIENT_LINES))]
            utterances.append({"speaker": "client", "text": text})
    return utterances


def session(rng, sid, counselor, client, seq, n_utt, ors=None):
    rec = {
        "session_id": sid,
        "counselor_id": counselor,
        "client_id": client,
        "sequence_no": seq,
        "utterances": make_utterances(rng, n_utt),
    }
    if ors is not None:
        rec["ors"] = ors
    return rec


def raw_from_normalized(qid, normalized):
    """Store a rating on the question's own anchoring (reverse items flipped)."""
    return 6 - normalized if qid in REVERSE else normalized


def rating(sid, qid, run, rater, raw, setting="detailed", evidence=None):
    rec = {
        "session_id": sid,
        "question_id": qid,
        "run_index": run,
        "rater_id": rater,
        "raw_score": int(raw),
        "raw_response": f"Score: {int(raw)}",
        "attempts": 1,
        "provenance": {
            "backend": "mock",
            "model": rater,
            "temperature": 1.0,
            "top_p": 1.0,
            "template_hash": "fixture",
            "setting": setting,
        },
    }
    if evidence is not None:
        rec["evidence"] = evidence
        rec["raw_response"] = f"Evidence: {evidence}\nScore: {int(raw)}"
    return rec


# --------------------------------------------------------------------------
def gen_small():
    rng = np.random.default_rng(101)
    sessions = [
        {
            "session_id": "s001",
            "counselor_id": "c01",
            "client_id": "u01",
            "sequence_no": 1,
            "utterances": [
                {"speaker": "counselor", "text": "How have you been since we last talked?"},
                {"speaker": "client", "text": "最近工作压力很大，晚上睡不好。"},
                {"speaker": "counselor", "text": "That sounds exhausting. What part weighs on you most?"},
                {"speaker": "client", "text": "主要是和同事的关系，我总觉得被忽视。"},
            ],
            "ors": {"physical_mental": 55, "relationships": 48, "social_life": 60, "overall": 52},
        },
        session(rng, "s002", "c01", "u01", 2, 5),
        session(
            rng, "s003", "c02", "u02", 1, 3,
            ors={"physical_mental": 70, "relationships": 66, "social_life": 71, "overall": 69},
        ),
    ]
    write_jsonl(os.path.join(FIXTURES, "sessions_small.jsonl"), sessions)

    truth = []
    for i, sid in enumerate(("s001", "s002", "s003")):
        scores = {qid: 1 + (i + q) % 5 for q, qid in enumerate(QUESTIONS)}
        truth.append({"session_id": sid, "scores": scores})
    write_jsonl(os.path.join(FIXTURES, "small_truth.jsonl"), truth)

    pii = [
        {
            "session_id": "p001",
            "counselor_id": "c01",
            "client_id": "u03",
            "sequence_no": 1,
            "utterances": [
                {"speaker": "client", "text": "You can call me at 13812345678 if anything changes."},
                {"speaker": "counselor", "text": "Let us keep contact on the platform instead."},
                {"speaker": "client", "text": "I also wrote to ming@example.com but got no reply."},
                {"speaker": "client", "text": "My profile is at https://example.com/profile if that helps."},
            ],
        }
    ]
    write_jsonl(os.path.join(FIXTURES, "sessions_pii.jsonl"), pii)


# --------------------------------------------------------------------------
def truth_table(rng, session_ids):
    """Hidden truth with real cross-session variance on every question."""
    truth = {}
    base = {qid: rng.uniform(2.2, 3.8) for qid in QUESTIONS}
    for sid in session_ids:
        ability = rng.normal(0.0, 0.9)
        scores = {}
        for qid in QUESTIONS:
            v = base[qid] + ability + rng.normal(0.0, 0.45)
            scores[qid] = int(np.clip(round(v), 1, 5))
        truth[sid] = scores
    # ensure variance per question
    for qid in QUESTIONS:
        values = {truth[sid][qid] for sid in session_ids}
        if len(values) < 2:
            first = session_ids[0]
            truth[first][qid] = 1 if truth[first][qid] >= 3 else 5
    return truth


def gen_mock10():
    rng = np.random.default_rng(1010)
    sessions = []
    for i in range(5):
        ors = {k: int(rng.integers(35, 90)) for k in
               ("physical_mental", "relationships", "social_life", "overall")}
        sessions.append(session(rng, f"m{i+1:02d}", "cA", "u1", i + 1, 4, ors))
    for i in range(5):
        ors = {k: int(rng.integers(35, 90)) for k in
               ("physical_mental", "relationships", "social_life", "overall")}
        sessions.append(session(rng, f"m{i+6:02d}", "cB", "u2", i + 1, 4, ors))
    write_jsonl(os.path.join(FIXTURES, "mock10", "sessions.jsonl"), sessions)

    ids = [s["session_id"] for s in sessions]
    truth = truth_table(rng, ids)
    write_jsonl(
        os.path.join(FIXTURES, "mock10", "truth.jsonl"),
        [{"session_id": sid, "scores": truth[sid]} for sid in ids],
    )

    # Three annotators who recorded exactly the hidden truth; their mean is
    # the reference sheet for alignment tests.
    human = []
    for annotator in ("ann1", "ann2", "ann3"):
        for sid in ids:
            for qid in QUESTIONS:
                human.append(rating(sid, qid, 0, annotator, truth[sid][qid], setting="none"))
    write_jsonl(os.path.join(FIXTURES, "mock10", "human_ratings.jsonl"), human)

    write_jsonl(
        os.path.join(FIXTURES, "mock10", "counselors.jsonl"),
        [{"counselor_id": "cA", "years_experience": 2},
         {"counselor_id": "cB", "years_experience": 10}],
    )


def gen_mock60():
    rng = np.random.default_rng(6060)
    sessions = []
    for i in range(60):
        sessions.append(session(rng, f"n{i+1:03d}", f"c{i%6+1:02d}", f"w{i+1:03d}", 1, 4))
    write_jsonl(os.path.join(FIXTURES, "mock60", "sessions.jsonl"), sessions)
    ids = [s["session_id"] for s in sessions]
    truth = truth_table(rng, ids)
    write_jsonl(
        os.path.join(FIXTURES, "mock60", "truth.jsonl"),
        [{"session_id": sid, "scores": truth[sid]} for sid in ids],
    )


# --------------------------------------------------------------------------
def gen_ors():
    rng = np.random.default_rng(4055)
    sessions, ratings = [], []
    totals = []
    for i in range(80):
        sid = f"o{i+1:03d}"
        ability = float(np.clip(rng.normal(3.5, 0.8), 1.2, 4.8))
        normalized = {}
        for qid in QUESTIONS:
            v = int(np.clip(round(ability + rng.normal(0.0, 0.5)), 1, 5))
            normalized[qid] = v
            ratings.append(rating(sid, qid, 0, "fixture-rater", raw_from_normalized(qid, v)))
        total = float(np.mean(list(normalized.values())))
        totals.append(total)
        # ORS aspects loosely coupled to the total: planted correlation near 0.3
        ors = {}
        for aspect in ("physical_mental", "relationships", "social_life", "overall"):
            raw = 16.0 * (total - 3.0) + rng.normal(0.0, 28.0)
            ors[aspect] = float(np.clip(round(50.0 + raw, 1), 0, 100))
        sessions.append(session(rng, sid, "cO", f"v{i+1:03d}", 1, 2, ors))
    write_jsonl(os.path.join(FIXTURES, "ors", "sessions.jsonl"), sessions)
    write_jsonl(os.path.join(FIXTURES, "ors", "ratings.jsonl"), ratings)

    # sanity: the planted total-vs-overall correlation should be near 0.3
    overall = [s["ors"]["overall"] for s in sessions]
    r = float(np.corrcoef(totals, overall)[0, 1])
    assert 0.2 < r < 0.4, f"planted correlation drifted: {r}"


def gen_experience():
    rng = np.random.default_rng(5050)
    sessions, ratings = [], []

    def add_counselor(cid, n_sessions, low, high, start):
        for i in range(n_sessions):
            sid = f"e{start+i:03d}"
            sessions.append(session(rng, sid, cid, f"x{start+i:03d}", 1, 2))
            n_high = int(rng.integers(5, 8))  # 5..7 of the 12 at the high anchor
            highs = set(rng.choice(12, size=n_high, replace=False).tolist())
            for qi, qid in enumerate(QUESTIONS):
                v = high if qi in highs else low
                ratings.append(rating(sid, qid, 0, "fixture-rater", raw_from_normalized(qid, v)))

    add_counselor("E1", 10, 4, 5, 1)    # strong, 2 years
    add_counselor("E2", 10, 2, 3, 101)  # weak, 10 years
    add_counselor("E3", 6, 3, 4, 201)   # middle, 5 years
    write_jsonl(os.path.join(FIXTURES, "experience", "sessions.jsonl"), sessions)
    write_jsonl(os.path.join(FIXTURES, "experience", "ratings.jsonl"), ratings)
    write_jsonl(
        os.path.join(FIXTURES, "experience", "counselors.jsonl"),
        [{"counselor_id": "E1", "years_experience": 2},
         {"counselor_id": "E2", "years_experience": 10},
         {"counselor_id": "E3", "years_experience": 5}],
    )


def gen_phases():
    rng = np.random.default_rng(7070)
    sessions, ratings = [], []

    def add_pair(cid, uid, prefix, trajectory):
        for seq, target in enumerate(trajectory, start=1):
            sid = f"{prefix}{seq:02d}"
            sessions.append(session(rng, sid, cid, uid, seq, 2))
            for qid in QUESTIONS:
                v = int(np.clip(round(target + rng.normal(0.0, 0.25)), 1, 5))
                ratings.append(rating(sid, qid, 0, "fixture-rater", raw_from_normalized(qid, v)))

    # 10 sessions, declining: early mean well above late mean
    add_pair("pc1", "pu1", "ph1_", [4.6, 4.5, 4.4, 4.0, 3.8, 3.6, 3.2, 3.0, 2.8, 2.6])
    # 9 sessions, exactly flat (no noise): late == early
    for seq in range(1, 10):
        sid = f"ph2_{seq:02d}"
        sessions.append(session(rng, sid, "pc1", "pu2", seq, 2))
        for qid in QUESTIONS:
            ratings.append(rating(sid, qid, 0, "fixture-rater", raw_from_normalized(qid, 3)))
    # 6 sessions, improving by more than one level
    add_pair("pc2", "pu3", "ph3_", [1.8, 2.0, 2.2, 3.4, 3.6, 3.8])
    # 2 sessions only: excluded
    for seq in (1, 2):
        sid = f"ph4_{seq:02d}"
        sessions.append(session(rng, sid, "pc2", "pu4", seq, 2))
        for qid in QUESTIONS:
            ratings.append(rating(sid, qid, 0, "fixture-rater", raw_from_normalized(qid, 3)))

    write_jsonl(os.path.join(FIXTURES, "phases", "sessions.jsonl"), sessions)
    write_jsonl(os.path.join(FIXTURES, "phases", "ratings.jsonl"), ratings)


# --------------------------------------------------------------------------
def gen_feedback_ratings():
    """A single CoT-annotated session for feedback composition tests."""
    rng = np.random.default_rng(9090)
    sessions = [session(rng, "f001", "cF", "uF", 1, 4)]
    ratings = []
    # Q6 the weakest, then Q10, then Q5; everything else at 4.
    planted = {"Q6": 2, "Q10": 2, "Q5": 3}
    for qid in QUESTIONS:
        normalized = planted.get(qid, 4)
        for run in range(3):
            ratings.append(
                rating(
                    "f001", qid, run, "mock-rater", raw_from_normalized(qid, normalized),
                    setting="detailed+cot",
                    evidence=f"run {run}: the exchange about weekly goals relates to {qid}.",
                )
            )
    write_jsonl(os.path.join(FIXTURES, "feedback", "sessions.jsonl"), sessions)
    write_jsonl(os.path.join(FIXTURES, "feedback", "ratings.jsonl"), ratings)

    assessments = []
    rows = [
        ("E", [4, 3, 4, 3, 4, 4, 3, 3, 4, 4]),
        ("H", [3, 3, 4, 3, 3, 4, 3, 4, 3, 3]),
    ]
    for cid, values in rows:
        for i, v in enumerate(values):
            assessments.append(
                {"counselor_id": cid, "report_id": f"r{i+1:02d}",
                 "q_understand": v, "q_directions": max(1, v - 1), "q_willingness": min(5, v + 1)}
            )
    write_jsonl(os.path.join(FIXTURES, "feedback", "assessments.jsonl"), assessments)


def main():
    gen_small()
    gen_mock10()
    gen_mock60()
    gen_ors()
    gen_experience()
    gen_phases()
    gen_feedback_ratings()
    print("fixtures written under", FIXTURES)


if __name__ == "__main__":
    sys.exit(main())
