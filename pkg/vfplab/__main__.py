"""vfplab.__main__: executed when the vfplab directory is called as script."""
from vfplab import vfplab

vfplab.main()
