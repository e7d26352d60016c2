"""
Face crop boxes
===============

Detected face boxes are enlarged by 1.3 about their centre before cropping,
which keeps some hair and jaw line in view.  Boxes near the frame edge are
clipped to the image.
"""

from vra.geometry import BBox, round_bbox, scale_bbox

frame_w, frame_h = 100, 100

box = BBox(10, 10, 30, 30)
print(scale_bbox(box, 1.3, frame_w, frame_h))

# Near the corner the enlarged box is cut at 0; the far edges still grow.
corner = scale_bbox(BBox(0, 0, 50, 50), 1.3, 60, 60)
print(corner)

# Crops need integer pixels: round outward so nothing of the face is lost.
print(round_bbox(scale_bbox(BBox(12.2, 40.7, 37.9, 71.1), 1.3, frame_w, frame_h)))
