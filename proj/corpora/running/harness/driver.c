#include <stdio.h>

void copy_buffer(FILE *f_true, FILE *f_false, char *buf, int which_file, int use_wrapper);

void do_something_with(char *local) { printf("first byte %d\n", local[0]); }

int main(int argc, char **argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s <input>\n", argv[0]);
    return 2;
  }
  FILE *f = fopen(argv[1], "rb");
  if (!f)
    return 2;
  char buf[512];
  for (int i = 0; i < 512; i++)
    buf[i] = (char)('A' + i % 26);
  copy_buffer(f, f, buf, 1, 0);
  fclose(f);
  printf("done\n");
  return 0;
}
