#!/usr/bin/env python3
"""How an image becomes text: global caption, region lines, fused description.

The evaluation never looks at pixels directly. A captioner summarizes the
whole image, a dense captioner describes each detected region with its box,
and a chat model fuses both levels into one object-centric description. This
script assembles the fusion prompt by hand so you can read exactly what the
chat model sees.
"""

from t2ieval.descriptor import (
    GlobalDescription,
    LocalDescription,
    compose_description_prompt,
    format_global,
    format_region,
    parse_region_line,
)
from t2ieval.gateway import RegionProposal

# the image-level view: one sentence plus the meta-information
g = GlobalDescription(caption="a red car and a white sheep in a field",
                      width=512, height=512)
print(format_global(g))

# the object-level view: one line per detected region, backend order
regions = [
    RegionProposal("car", "a red car parked on grass", (12, 40, 300, 210), 0.93),
    RegionProposal("sheep", "a white sheep standing", (310, 60, 490, 230), 0.88),
]
for r in regions:
    print(format_region(r))

# region lines are machine-recoverable (labels without colons round-trip)
line = format_region(regions[0])
print("\nparsed back:", parse_region_line(line))

# the full fusion prompt fed to the chat model
request = compose_description_prompt(g, LocalDescription.of(regions))
print("\n--- fusion prompt ---")
print(request.user_text)

# an empty detection list keeps the template well-formed
empty = compose_description_prompt(g, LocalDescription.of([]))
print("\n--- with no regions ---")
print(empty.user_text.splitlines()[1])
