"""Writes the stats fixture: four sites across all splits with images at and
around the 224 px boundary, ratios at the overflow edge, one PNG stored
under a .jpg name, one corrupt file and files the scanner must ignore.

    python3 gen_imageset.py ../fixtures/imageset
"""

import sys
from pathlib import Path

from PIL import Image

SITES = {
    "train_a": ("train", "en", {1: (224, 224), 2: (225, 225), 3: (300, 200), 4: (640, 100), 6: (100, 300)}),
    "val_b": ("validation", "tr", {1: (225, 224), 2: (64, 64), 3: None}),
    "test_c": ("test", "en", {1: (160, 120), 2: (120, 160), 3: (250, 250), 4: (299, 100), 5: (300, 100)}),
    "test_d": ("test", "", {}),
}


def main(out):
    out = Path(out)
    lines = ["site_id,url,label,split,language,screenshot_path,text_path"]
    for i, (site, (split, lang, images)) in enumerate(SITES.items()):
        label = ["machinery", "music"][i % 2]
        lines.append(f"{site},http://{site}.example/,{label},{split},{lang},,")
        d = out / "images" / site
        d.mkdir(parents=True, exist_ok=True)
        for ordinal, size in images.items():
            path = d / f"{ordinal:02d}.jpg"
            if size is None:
                path.write_bytes(b"\xff\xd8\xff\xe0 truncated")
                continue
            img = Image.new("RGB", size, (40 * ordinal % 256, 90, 160))
            fmt = "PNG" if (site, ordinal) == ("val_b", 2) else "JPEG"
            img.save(path, format=fmt)
    (out / "images" / "train_a" / "notes.txt").write_text("not an image\n")
    Image.new("RGB", (500, 500)).save(out / "images" / "train_a" / "21.jpg", format="JPEG")
    (out / "manifest.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
