"""Walkthrough: the metric suite used to score game outputs.

Entity precision/recall against a lexicon, rule-based error-removal
judging, word-level edit distance, entity drift, and Krippendorff's alpha
for calibrating an automated judge against human raters.
"""

from hypgame import parse_pathway
from hypgame.evaluation import (
    JudgeVerdict,
    LabelMatrix,
    Lexicon,
    LexiconEntry,
    RuleJudge,
    entity_drift,
    entity_prf,
    error_removal_rate,
    krippendorff_alpha,
    levenshtein_word_norm,
    state_entities,
    strict_consensus,
    tag_entities,
)

lexicon = Lexicon([
    LexiconEntry("ATP", "ATP", "chemical"),
    LexiconEntry("glucose", "glucose", "chemical"),
    LexiconEntry("glucose-6-phosphate", "glucose-6-phosphate", "chemical"),
    LexiconEntry("HK1", "hexokinase 1", "gene"),
    LexiconEntry("hexokinase 1", "hexokinase 1", "gene"),
    LexiconEntry("PFK1", "PFK1", "gene"),
])

# --- 1. Entity tagging: greedy longest match, canonical names out. -----------

sentence = "ATP phosphorylates glucose to form glucose-6-phosphate."
tagged = tag_entities(sentence, lexicon)
print(f"tagged {sentence!r}")
print(f"  -> {sorted(tagged.entities)}")
print("  (the inner 'glucose' of glucose-6-phosphate is not double counted)")

aliased = tag_entities("HK1 catalyses the first step", lexicon)
print(f"alias HK1 resolves to {sorted(aliased.entities)}")

# --- 2. Entity precision / recall / F1. ---------------------------------------

reference = parse_pathway({"name": "ref", "steps": [
    "hexokinase 1 phosphorylates glucose using ATP",
    "PFK1 commits the pathway downstream",
]})
generated = parse_pathway({"name": "gen", "steps": [
    "hexokinase 1 phosphorylates glucose using ATP",
    "glucose-6-phosphate accumulates",
]})
prf = entity_prf(state_entities(reference, lexicon), state_entities(generated, lexicon))
print(f"\nentity precision={prf.precision:.3f} recall={prf.recall:.3f} f1={prf.f1:.3f}")

# --- 3. Error-removal judging with the offline rule judge. --------------------

original = "hexokinase 1 phosphorylates glucose using ATP"
corrupted = "hexokinase 1 dephosphorylates glucose using ATP"
judge = RuleJudge()
verdicts = [
    JudgeVerdict(item_id="repaired", persists=judge.persistence(
        original, corrupted,
        parse_pathway({"name": "o1", "steps": [original]}),
    )),
    JudgeVerdict(item_id="untouched", persists=judge.persistence(
        original, corrupted,
        parse_pathway({"name": "o2", "steps": [corrupted]}),
    )),
]
print(f"\nerror removal rate over two outputs: {error_removal_rate(verdicts):.2f}"
      " (one repaired, one not)")

# --- 4. Surface drift: word-level edit distance and entity churn. -------------

distance = levenshtein_word_norm(original, corrupted)
print(f"normalized word-level edit distance: {distance:.3f}")
drift = entity_drift(reference, generated, lexicon)
print(f"gene-level entity drift: {drift}")

# --- 5. Judge calibration with Krippendorff's alpha. ---------------------------

annotator_1 = [1, 0, 1, 0, 1]
annotator_2 = [1, 0, 0, 0, 1]
alpha_humans = krippendorff_alpha(LabelMatrix.from_rows({
    "annotator_1": annotator_1, "annotator_2": annotator_2,
}))
print(f"\nalpha(annotator_1, annotator_2) = {alpha_humans:.2f}")

# A strict consensus (positive only when both raters agree) gives a
# conservative human reference for scoring the automated judge.
llm_judge = [1, 0, 0, 0, 1]
consensus = strict_consensus(annotator_1, annotator_2)
alpha_consensus = krippendorff_alpha(LabelMatrix.from_rows({
    "consensus": consensus, "llm_judge": llm_judge,
}))
print(f"alpha(strict consensus, automated judge) = {alpha_consensus:.2f}")
