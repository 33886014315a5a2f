from setuptools import find_packages
from setuptools import setup

with open("README.md", "rb") as f:
    long_description = f.read().decode("utf-8")

setup(
    name="vfplab",
    use_scm_version=True,
    description=(
        "vfplab simulates the nonlinear Vlasov-Fokker-Planck equation and checks "
        "its free-energy, GENERIC and transport structure numerically."
    ),
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="3-Clause BSD",
    classifiers=[
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    keywords=(
        "vlasov fokker-planck langevin mean-field generic free-energy "
        "wasserstein hwi kinetic"
    ),
    packages=find_packages(exclude=["tests"]),
    setup_requires=["setuptools_scm"],
    install_requires=[
        "numpy>=1.17",
        "scipy>=1.4",
        "matplotlib>=2.0",
        "lmfit>=0.9.11",
        "asteval>=0.9.11",
    ],
    extras_require={"test": ["pytest>=5.0"]},
    python_requires=">=3.7",
    entry_points={"console_scripts": ["vfplab = vfplab.vfplab:main"]},
)
