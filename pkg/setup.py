"""Setup скрипт для пакета mnt-ris-bench"""

from setuptools import setup, find_packages

# Читаем README для long_description
def read_readme():
    with open("README.md", "r", encoding="utf-8") as fh:
        return fh.read()

# Читаем requirements
def read_requirements():
    with open("requirements.txt", "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]

setup(
    name="mnt-ris-bench",
    version="0.1.0",
    author="MNT RIS Bench Team",
    description="Оптимизация 1-битных RIS с взаимной связью: ансамбли MNT, CD, TABP, GA",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.10",
    install_requires=read_requirements(),
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-mock>=3.10.0",
            "black>=23.0.0",
            "isort>=5.12.0",
            "flake8>=6.0.0",
            "mypy>=1.0.0",
        ],
        "test": [
            "pytest>=7.0.0",
            "pytest-mock>=3.10.0",
        ],
    },
    include_package_data=True,
    package_data={
        "mnt_ris_bench": ["py.typed"],
    },
    keywords=[
        "ris",
        "reconfigurable-intelligent-surface",
        "mutual-coupling",
        "scattering-matrix",
        "multiport-network",
        "coordinate-descent",
        "genetic-algorithm",
        "monte-carlo",
    ],
    entry_points={
        "console_scripts": [
            "mnt-ris=mnt_ris_bench.cli:main",
        ],
    },
    zip_safe=False,
)
