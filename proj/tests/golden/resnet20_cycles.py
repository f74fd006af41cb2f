"""Regenerates resnet20_im2col_cycles.csv from the architecture table alone.

Every layer is written out by hand (no loops over stages) so the sheet can be
audited line by line against the standard CIFAR ResNet-20 definition. The stem
convolution is listed but carries zero cycles because it is never mapped.
"""
import csv
import math
import sys

# name, c_in, c_out, k, ifm, stride, pad
LAYERS = [
    ("conv1", 3, 16, 3, 32, 1, 1),
    ("layer1.0.conv1", 16, 16, 3, 32, 1, 1),
    ("layer1.0.conv2", 16, 16, 3, 32, 1, 1),
    ("layer1.1.conv1", 16, 16, 3, 32, 1, 1),
    ("layer1.1.conv2", 16, 16, 3, 32, 1, 1),
    ("layer1.2.conv1", 16, 16, 3, 32, 1, 1),
    ("layer1.2.conv2", 16, 16, 3, 32, 1, 1),
    ("layer2.0.conv1", 16, 32, 3, 32, 2, 1),
    ("layer2.0.conv2", 32, 32, 3, 16, 1, 1),
    ("layer2.0.downsample", 16, 32, 1, 32, 2, 0),
    ("layer2.1.conv1", 32, 32, 3, 16, 1, 1),
    ("layer2.1.conv2", 32, 32, 3, 16, 1, 1),
    ("layer2.2.conv1", 32, 32, 3, 16, 1, 1),
    ("layer2.2.conv2", 32, 32, 3, 16, 1, 1),
    ("layer3.0.conv1", 32, 64, 3, 16, 2, 1),
    ("layer3.0.conv2", 64, 64, 3, 8, 1, 1),
    ("layer3.0.downsample", 32, 64, 1, 16, 2, 0),
    ("layer3.1.conv1", 64, 64, 3, 8, 1, 1),
    ("layer3.1.conv2", 64, 64, 3, 8, 1, 1),
    ("layer3.2.conv1", 64, 64, 3, 8, 1, 1),
    ("layer3.2.conv2", 64, 64, 3, 8, 1, 1),
]


def main(out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["array", "layer", "rows", "cols", "ar", "ac", "pw_steps", "cycles"])
    for size in (64, 128):
        total = 0
        for name, cin, cout, k, ifm, stride, pad in LAYERS:
            ofm = (ifm + 2 * pad - k) // stride + 1
            rows, cols = cin * k * k, cout
            ar, ac = math.ceil(rows / size), math.ceil(cols / size)
            steps = ofm * ofm
            cycles = 0 if name == "conv1" else ar * ac * steps
            total += cycles
            w.writerow([f"{size}x{size}", name, rows, cols, ar, ac, steps, cycles])
        w.writerow([f"{size}x{size}", "TOTAL", "", "", "", "", "", total])


if __name__ == "__main__":
    main(sys.stdout)
