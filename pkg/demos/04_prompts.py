"""Prompt assembly: variants, exemplar files, and request fingerprints.

A prompt is deterministic scaffolding around a few worked examples:
an optional header of numbered rules, an optional variant banner, the
exemplar question/solution blocks, and the test question with a
trailing "Solution:" cue.  Identical inputs always produce identical
bytes, which is what makes cassette replay exact.

    python3 demos/04_prompts.py
"""

from declsolve import VARIANTS, CompletionRequest, assemble_prompt, fingerprint, spec_for_variant
from declsolve.prompts import DecodingParams, default_exemplar_path

print("variants:", ", ".join(VARIANTS))
print("shipped exemplars:", default_exemplar_path("declarative").name)

# The default spec for each variant loads a packaged exemplar file.
spec = spec_for_variant("declarative_principles")
prompt = assemble_prompt(spec, "A pen costs 2 dollars. How much do 7 pens cost?")

head, _, _ = prompt.partition("\n\nQuestion:")
print("\nheader + banner:")
for line in head.splitlines():
    print("  ", line)
print(f"\nfull prompt: {len(prompt)} chars, ends with {prompt[-22:]!r}")

# Decoding is greedy and bounded by default — sampling is opt-in.
params = DecodingParams()
print("\ndefaults:", params)

# The fingerprint covers everything the endpoint sees: model, prompt,
# decoding parameters, stop sequences.  Any change re-keys the request.
request = CompletionRequest("demo-model", prompt, params)
print("fingerprint:", fingerprint(request)[:16], "…")

for variant in VARIANTS:
    other = assemble_prompt(spec_for_variant(variant), "Same question?")
    digest = fingerprint(CompletionRequest("demo-model", other, params))
    print(f"  {variant:28s} {digest[:16]}…")
