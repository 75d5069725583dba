"""Serialize a jittered two-line page into reading order, then fix a
mistake with the swap operation.
"""

from handscribe.order import BoxRecord, group_sequence, serialize_boxes, swap

boxes = [
    BoxRecord(id="quick", x=70, y=12, w=46, h=18),
    BoxRecord(id="The", x=10, y=10, w=40, h=18),
    BoxRecord(id="fox", x=130, y=15, w=34, h=18),   # jitter inside line 1
    BoxRecord(id="jumps", x=10, y=52, w=50, h=18),
    BoxRecord(id="over", x=75, y=55, w=40, h=18),
]

layout = serialize_boxes(boxes)
print("serialized order:", " -> ".join(layout.sequence))
print("line clusters:", group_sequence(boxes, layout.sequence))
print("neighbors of 'quick':", layout.neighbors["quick"])

# pretend the serializer got two words backwards; the fix is one swap
flipped = swap(layout, "The", "quick")
print("\nafter swapping The/quick:", " -> ".join(flipped.sequence))
undone = swap(flipped, "The", "quick")
print("swap is an involution:", undone.sequence == layout.sequence)
