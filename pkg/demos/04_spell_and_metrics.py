"""Edit distance, corpus CER and dictionary spell correction."""

from handscribe.lexicon import (
    Dictionary,
    EvalPair,
    add_word,
    cer,
    correct,
    default_dictionary,
    levenshtein,
)

print("levenshtein('kitten', 'sitting') =", levenshtein("kitten", "sitting"))

pairs = [
    EvalPair(ground_truth="the", recognized="the"),
    EvalPair(ground_truth="quick", recognized="qujck"),
    EvalPair(ground_truth="fox", recognized="fax"),
]
print("corpus CER over %d words = %.4f" % (len(pairs), cer(pairs)))

words = default_dictionary()
for token in ["teh", "Quxck", "fox", "zzzzq", "."]:
    print(f"correct({token!r}) -> {correct(token, words)!r}")

# user vocabulary: teach the dictionary a project-specific word
add_word(words, "handscribe", frequency=50)
print("after add_word:", correct("handscrib", words))
