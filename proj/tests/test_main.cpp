#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

int main(int argc, char** argv) {
#if defined(M_MMAP_THRESHOLD) && defined(M_TRIM_THRESHOLD)
  // Training-scale cases allocate multi-megabyte matrices every step; keep
  // them on the heap free list instead of mmap so steps don't pay repeated
  // page-zeroing costs.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  return doctest::Context(argc, argv).run();
}
