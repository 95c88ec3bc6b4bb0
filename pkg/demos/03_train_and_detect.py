# # Train a toy detector and scan a scene
#
# The synthetic fixture is a bright vertical bar on noise. Positives are
# 64x128 crops with the bar centred; negatives are plain noise, bars shifted
# well off-centre, and shrunken bars like those a coarser level would see.

import time

from pedscan import PipelineConfig, detect
from pedscan.pipeline import train_from_images
from pedscan.synthetic import scene, training_set

pos, neg = training_set(seed=0)
print(len(pos), "positives,", len(neg), "negatives")

# ## One model per variant
#
# lbp is the cheapest. hoglbp concatenates both feature streams and is the
# most expensive.

frame = scene(width=512, height=256, at=(200, 64))
for variant in ("lbp", "hog", "hoglbp"):
    t0 = time.perf_counter()
    model = train_from_images(pos, neg, variant, epochs=20, seed=0)
    dets, maps = detect(frame, PipelineConfig(variant=variant), model, return_score_maps=True)
    print(f"{variant:7s} levels={len(maps)} detections={len(dets)} "
          f"({time.perf_counter() - t0:.1f}s)")
    for d in dets:
        print("   ", d.to_json())
