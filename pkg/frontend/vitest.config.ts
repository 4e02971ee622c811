import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    environment: 'node',
    testTimeout: 20_000,
    hookTimeout: 45_000,
    // The integration file spawns one shared Python server; keep files
    // sequential so ports and spawn cost are paid once.
    fileParallelism: false,
  },
});
